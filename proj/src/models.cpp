#include "chaomask/models.hpp"

#include <cmath>
#include <string>

#include "chaomask/errors.hpp"
#include "chaomask/kernels.hpp"

namespace chaomask {

LtiPlant::LtiPlant(Matrix a, Matrix b, Matrix c) : a_(std::move(a)), b_(std::move(b)), c_(std::move(c))
{
    require_square(a_, "plant A");
    require_nonempty(b_, "plant B");
    require_nonempty(c_, "plant C");
    if (b_.rows() != a_.rows())
        throw DimensionError("plant B must have as many rows as A");
    if (c_.cols() != a_.cols())
        throw DimensionError("plant C must have as many columns as A");
    require_finite(a_, "plant A");
    require_finite(b_, "plant B");
    require_finite(c_, "plant C");
    if (!is_observable(a_, c_))
        throw DomainError("plant (A, C) is not observable");
}

bool is_observable(const Matrix& a, const Matrix& c)
{
    require_square(a, "A");
    if (c.cols() != a.cols())
        throw DimensionError("C column count must match A");
    const Eigen::Index n = a.rows();
    Matrix stack(c.rows() * n, n);
    Matrix block = c;
    for (Eigen::Index k = 0; k < n; ++k) {
        stack.middleRows(k * c.rows(), c.rows()) = block;
        block = block * a;
    }
    Eigen::JacobiSVD<Matrix> svd(stack);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0)
        return false;
    const double tol = 1e-8 * sv(0);
    return (sv.array() > tol).count() == n;
}

// --- PolynomialMap -----------------------------------------------------------

PolynomialMap::PolynomialMap(int n_in, int n_out)
    : n_in_(n_in), n_out_(n_out), terms_(static_cast<std::size_t>(std::max(n_out, 0)))
{
    if (n_in < 0 || n_out < 0)
        throw DimensionError("polynomial map dimensions must be nonnegative");
}

void PolynomialMap::add_term(int output, double coeff, std::vector<int> exponents)
{
    if (output < 0 || output >= n_out_)
        throw DimensionError("monomial output index out of range");
    if (static_cast<int>(exponents.size()) != n_in_)
        throw DimensionError("monomial exponent vector must have length " + std::to_string(n_in_));
    for (int e : exponents)
        if (e < 0)
            throw DomainError("monomial exponents must be nonnegative");
    if (!std::isfinite(coeff))
        throw DomainError("monomial coefficient must be finite");
    terms_[static_cast<std::size_t>(output)].push_back({coeff, std::move(exponents)});
}

bool PolynomialMap::is_zero() const noexcept
{
    for (const auto& out : terms_)
        for (const auto& t : out)
            if (t.coeff != 0.0)
                return false;
    return true;
}

Vector PolynomialMap::eval(const Vector& v) const
{
    if (v.size() != n_in_)
        throw DimensionError("polynomial map input has wrong length");
    Vector out = Vector::Zero(n_out_);
    for (int i = 0; i < n_out_; ++i) {
        for (const auto& t : terms_[static_cast<std::size_t>(i)]) {
            double value = t.coeff;
            for (int k = 0; k < n_in_; ++k)
                for (int e = 0; e < t.exponents[static_cast<std::size_t>(k)]; ++e)
                    value *= v(k);
            out(i) += value;
        }
    }
    return out;
}

Matrix PolynomialMap::jacobian(const Vector& v) const
{
    if (v.size() != n_in_)
        throw DimensionError("polynomial map input has wrong length");
    Matrix jac = Matrix::Zero(n_out_, n_in_);
    for (int i = 0; i < n_out_; ++i) {
        for (const auto& t : terms_[static_cast<std::size_t>(i)]) {
            for (int j = 0; j < n_in_; ++j) {
                const int ej = t.exponents[static_cast<std::size_t>(j)];
                if (ej == 0)
                    continue;
                double value = t.coeff * ej;
                for (int k = 0; k < n_in_; ++k) {
                    const int ek = t.exponents[static_cast<std::size_t>(k)] - (k == j ? 1 : 0);
                    for (int e = 0; e < ek; ++e)
                        value *= v(k);
                }
                jac(i, j) += value;
            }
        }
    }
    return jac;
}

// --- masks ------------------------------------------------------------------

ChaoticMask rossler_p4(double a, double b)
{
    ChaoticMask mask;
    mask.Phi.resize(3, 3);
    mask.Phi << 0, -1, -1,
                1,  0,  0,
                0,  a, -b;
    mask.phi = PolynomialMap(3, 3);
    if (a != 0.0)
        mask.phi.add_term(2, -a, {0, 2, 0});
    mask.Lambda.resize(0, 3);
    return mask;
}

ChaoticMask transform_mask(const ChaoticMask& mask, const Vector& t_diag)
{
    const Eigen::Index n = mask.n_xi();
    if (t_diag.size() != n)
        throw DimensionError("transform must have one entry per chaotic state");
    if (!((t_diag.array() > 0.0).all()) || !t_diag.allFinite())
        throw DomainError("transform entries must be positive");

    ChaoticMask out;
    out.Phi = t_diag.asDiagonal() * mask.Phi * t_diag.cwiseInverse().asDiagonal();
    out.phi = PolynomialMap(mask.phi.n_in(), mask.phi.n_out());
    // phi'(xi') = T phi(T^-1 xi'): a monomial c prod xi_k^e_k in output i
    // becomes c t_i prod t_k^-e_k prod xi'_k^e_k.
    for (int i = 0; i < mask.phi.n_out(); ++i) {
        for (const auto& term : mask.phi.terms(i)) {
            double coeff = term.coeff * t_diag(i);
            for (int k = 0; k < mask.phi.n_in(); ++k)
                coeff /= std::pow(t_diag(k), term.exponents[static_cast<std::size_t>(k)]);
            out.phi.add_term(i, coeff, term.exponents);
        }
    }
    out.Lambda = mask.Lambda;
    return out;
}

ChaoticMask scale_mask(const ChaoticMask& mask, double beta)
{
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw DomainError("beta must be positive");
    Vector t = Vector::Ones(mask.n_xi());
    t(t.size() - 1) = 1.0 / beta;
    return transform_mask(mask, t);
}

BoxEstimate estimate_invariant_box(const ChaoticMask& mask, const Vector& xi0, double t_settle,
                                   double t_obs, double margin, double dt)
{
    if (xi0.size() != mask.n_xi())
        throw DimensionError("xi0 has wrong length");
    if (!(t_obs > 0.0) || !(t_settle >= 0.0))
        throw DomainError("t_obs must be positive and t_settle nonnegative");
    if (!(margin >= 0.0))
        throw DomainError("margin must be nonnegative");

    const std::size_t settle_steps = t_settle > 0.0 ? step_count(dt, t_settle) : 0;
    const std::size_t total_steps = settle_steps + step_count(dt, t_obs);
    const VectorField field = [&mask](double, const Vector& xi) { return mask.derivative(xi); };
    const bool has_output = mask.Lambda.rows() > 0;

    Vector xi = xi0;
    Vector peak = Vector::Zero(mask.n_xi());
    double d_peak = 0.0;
    for (std::size_t k = 1; k <= total_steps; ++k) {
        xi = rk4_step(field, static_cast<double>(k - 1) * dt, xi, dt);
        if (!xi.allFinite() || xi.norm() > 1e6)
            throw NotBoundedError("chaotic trajectory left the 1e6 ball at t = " +
                                  std::to_string(static_cast<double>(k) * dt) +
                                  " s; xi0 is likely outside the basin");
        if (k < settle_steps)
            continue;
        peak = peak.cwiseMax(xi.cwiseAbs());
        if (has_output)
            d_peak = std::max(d_peak, (mask.Lambda * xi).norm());
    }
    return {(1.0 + margin) * peak, (1.0 + margin) * d_peak};
}

double estimate_lipschitz(const ChaoticMask& mask, int grid_per_axis)
{
    if (!mask.sigma)
        throw DomainError("estimate_lipschitz needs the invariant box");
    if (mask.phi.is_zero())
        return 0.0;
    return 1.05 * kernels::max_jacobian_norm(mask.phi, *mask.sigma, grid_per_axis);
}

ChaoticMask populate_mask(ChaoticMask mask, const Vector& xi0, const BoxOptions& opts)
{
    const BoxEstimate box = estimate_invariant_box(mask, xi0, opts.t_settle, opts.t_obs, opts.margin, opts.dt);
    mask.sigma = box.sigma;
    mask.d_bound = box.d_bound;
    mask.ell = estimate_lipschitz(mask, opts.grid_per_axis);
    return mask;
}

Vector saturate(const Vector& v, const Vector& sigma)
{
    if (v.size() != sigma.size())
        throw DimensionError("saturate: vector and box differ in length");
    return v.cwiseMax(-sigma).cwiseMin(sigma);
}

// --- extended system ---------------------------------------------------------

Matrix ExtendedSystem::E() const
{
    Matrix e = Matrix::Zero(n(), n());
    e.topLeftCorner(n_xi(), n_xi()).setIdentity();
    return e;
}

ExtendedSystem build_extended(const LtiPlant& plant, const ChaoticMask& mask)
{
    if (!mask.populated())
        throw DomainError("mask must carry sigma, ell and d_bound before building the extended system");
    if (mask.Lambda.rows() != plant.ny() || mask.Lambda.cols() != mask.n_xi())
        throw DimensionError("mask Lambda must be " + std::to_string(plant.ny()) + "x" +
                             std::to_string(mask.n_xi()));
    if (mask.phi.n_in() != mask.n_xi() || mask.phi.n_out() != mask.n_xi())
        throw DimensionError("mask nonlinearity must map the chaotic state to itself");

    const Eigen::Index nxi = mask.n_xi();
    const Eigen::Index nx = plant.nx();
    const Eigen::Index n = nxi + nx;

    Matrix a = Matrix::Zero(n, n);
    a.topLeftCorner(nxi, nxi) = mask.Phi;
    a.bottomRightCorner(nx, nx) = plant.A();

    Matrix b = Matrix::Zero(n, plant.nu());
    b.bottomRows(nx) = plant.B();

    Matrix c(plant.ny(), n);
    c << mask.Lambda, plant.C();

    PolynomialMap g(static_cast<int>(n), static_cast<int>(n));
    for (int i = 0; i < mask.phi.n_out(); ++i) {
        for (const auto& term : mask.phi.terms(i)) {
            std::vector<int> exps(static_cast<std::size_t>(n), 0);
            std::copy(term.exponents.begin(), term.exponents.end(), exps.begin());
            g.add_term(i, term.coeff, std::move(exps));
        }
    }

    return ExtendedSystem{std::move(a), std::move(b), std::move(g), std::move(c), mask, plant};
}

} // namespace chaomask

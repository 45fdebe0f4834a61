#include "chaomask/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "chaomask/errors.hpp"

namespace chaomask {

namespace {

constexpr double kGolden = 0.6180339887498949; // (sqrt(5) - 1) / 2

double golden_section_min(const Matrix& a, const Matrix& c, double lo, double hi, double& f_best)
{
    const auto f = [&](double w) { return min_singular_value_freq(a, c, w); };
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > 1e-8 * std::max(1.0, std::abs(0.5 * (lo + hi)))) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = f(x2);
        }
    }
    if (f1 <= f2) {
        f_best = f1;
        return x1;
    }
    f_best = f2;
    return x2;
}

struct Candidate {
    double eta = 0.0;
    double eps = 0.0;
    bool solved = false;
    double margin = std::numeric_limits<double>::infinity();
    ObserverGain gain;
};

void require_ell(const ExtendedSystem& ext)
{
    if (!ext.mask.ell || !(*ext.mask.ell >= 0.0))
        throw DomainError("extended system has no Lipschitz constant");
}

// P for a fixed (eta, eps); empty optional when that grid point has no
// admissible solution.
std::optional<Matrix> solve_candidate(const ExtendedSystem& ext, double eta, double eps)
{
    const Eigen::Index n = ext.n();
    const double ell = ext.ell();
    const Matrix q = ext.E() - 2.0 * eta * ext.C.transpose() * ext.C + eps * Matrix::Identity(n, n);
    try {
        if (ell > 0.0)
            return solve_riccati(ext.A, ell * ell * Matrix::Identity(n, n), q, RiccatiBranch::AntiStabilizing);
        // Without the quadratic term the equation is linear in P.
        Matrix p = symmetrize(solve_sylvester(ext.A.transpose(), ext.A, -q));
        if (!(min_eigenvalue_sym(p) > 0.0))
            return std::nullopt;
        return p;
    } catch (const ComputationError&) {
        return std::nullopt;
    }
}

Candidate evaluate_candidate(const ExtendedSystem& ext, double eta, double eps)
{
    Candidate cand;
    cand.eta = eta;
    cand.eps = eps;
    const auto p = solve_candidate(ext, eta, eps);
    if (!p)
        return cand;
    cand.solved = true;

    ObserverGain& g = cand.gain;
    g.P = *p;
    g.N = eta * ext.C.transpose();
    g.L = g.P.llt().solve(g.N);
    g.margin = verify_lmi(ext, g.P, g.N);
    g.ell_used = ext.ell();
    g.eta = eta;
    g.eps = eps;
    cand.margin = g.margin;

    const double mismatch = (g.N - g.P * g.L).norm();
    if (!(mismatch < 1e-8 * std::max(g.N.norm(), std::numeric_limits<double>::min())) || !g.L.allFinite())
        cand.margin = std::numeric_limits<double>::infinity();
    return cand;
}

} // namespace

double default_w_max(const Matrix& a)
{
    return 10.0 * (1.0 + a.norm());
}

UnobservabilityReport distance_to_unobservability(const Matrix& a, const Matrix& c, std::optional<double> w_max,
                                                  int n_grid, Execution exec)
{
    require_square(a, "A");
    if (c.cols() != a.cols())
        throw DimensionError("C column count must match A");
    if (n_grid < 100)
        throw DomainError("frequency grid needs at least 100 points");
    const double top = w_max.value_or(default_w_max(a));
    if (!(top > 0.0) || !std::isfinite(top))
        throw DomainError("w_max must be positive");

    std::vector<double> w(static_cast<std::size_t>(n_grid));
    for (int i = 0; i < n_grid; ++i)
        w[static_cast<std::size_t>(i)] = top * i / (n_grid - 1);
    const std::vector<double> s = exec == Execution::Parallel ? kernels::sigma_min_profile(a, c, w)
                                                               : kernels::sigma_min_profile_serial(a, c, w);

    UnobservabilityReport report;
    report.profile.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        report.profile.push_back({w[i], s[i]});

    const auto best = static_cast<std::size_t>(std::min_element(s.begin(), s.end()) - s.begin());
    report.delta = s[best];
    report.w_star = w[best];

    const double lo = best > 0 ? w[best - 1] : 0.0;
    const double hi = best + 1 < w.size() ? w[best + 1] : top;
    double refined = 0.0;
    const double w_ref = golden_section_min(a, c, lo, hi, refined);
    if (refined < report.delta) {
        report.delta = refined;
        report.w_star = w_ref;
    }
    return report;
}

bool check_sufficiency(const UnobservabilityReport& report, double ell)
{
    if (!(ell >= 0.0))
        throw DomainError("Lipschitz constant must be nonnegative");
    return report.delta > ell;
}

Matrix lmi_block(const ExtendedSystem& ext, const Matrix& p, const Matrix& n)
{
    require_ell(ext);
    const Eigen::Index dim = ext.n();
    if (p.rows() != dim || p.cols() != dim)
        throw DimensionError("P must be " + std::to_string(dim) + "x" + std::to_string(dim));
    if (n.rows() != dim || n.cols() != ext.C.rows())
        throw DimensionError("N must be " + std::to_string(dim) + "x" + std::to_string(ext.C.rows()));

    const Matrix nc = n * ext.C;
    const Matrix upper = symmetrize(p * ext.A + ext.A.transpose() * p - nc - nc.transpose() + ext.E());
    const double ell = ext.ell();
    if (ell == 0.0)
        return upper;

    Matrix block(2 * dim, 2 * dim);
    block << upper, p, p, -(1.0 / (ell * ell)) * Matrix::Identity(dim, dim);
    return block;
}

double verify_lmi(const ExtendedSystem& ext, const Matrix& p, const Matrix& n)
{
    require_square(p, "P");
    if ((p - p.transpose()).norm() > 1e-10 * std::max(1.0, p.norm()))
        throw DomainError("P is not symmetric");
    if (!(min_eigenvalue_sym(p) > 0.0))
        throw DomainError("P is not positive definite");
    return max_eigenvalue_sym(lmi_block(ext, p, n));
}

Matrix closed_loop_lmi(const ExtendedSystem& ext, const Matrix& p, const Matrix& l)
{
    require_ell(ext);
    const Matrix acl = ext.A - l * ext.C;
    const double ell = ext.ell();
    return symmetrize(acl.transpose() * p + p * acl + ell * ell * p * p + ext.E());
}

std::vector<double> synthesis_eta_grid()
{
    std::vector<double> grid(25);
    for (int k = 0; k < 25; ++k)
        grid[static_cast<std::size_t>(k)] = std::pow(10.0, -2.0 + 8.0 * k / 24.0);
    return grid;
}

std::vector<double> synthesis_eps_grid()
{
    return {1e-6, 1e-4, 1e-2};
}

ObserverGain synthesize_gain(const ExtendedSystem& ext, Execution exec)
{
    require_ell(ext);
    std::vector<Candidate> cands;
    for (double eta : synthesis_eta_grid())
        for (double eps : synthesis_eps_grid()) {
            Candidate c;
            c.eta = eta;
            c.eps = eps;
            cands.push_back(std::move(c));
        }

    const auto count = static_cast<std::int64_t>(cands.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < count; ++i) {
            auto& c = cands[static_cast<std::size_t>(i)];
            c = evaluate_candidate(ext, c.eta, c.eps);
        }
    } else {
        for (auto& c : cands)
            c = evaluate_candidate(ext, c.eta, c.eps);
    }

    // Fixed scan order keeps the choice independent of thread scheduling.
    const Candidate* best = nullptr;
    double best_margin = std::numeric_limits<double>::infinity();
    for (const auto& c : cands) {
        if (c.solved && c.margin < best_margin) {
            best_margin = c.margin;
            best = &c;
        }
    }
    if (best == nullptr || !(best_margin < 0.0))
        throw InfeasibleSynthesis("no (eta, eps) grid point certifies the observer LMI; best margin " +
                                      std::to_string(best_margin),
                                  best_margin);
    return best->gain;
}

ObserverGain verify_gain(const ExtendedSystem& ext, const Matrix& l)
{
    require_ell(ext);
    if (l.rows() != ext.n() || l.cols() != ext.C.rows())
        throw DimensionError("L must be " + std::to_string(ext.n()) + "x" + std::to_string(ext.C.rows()));
    require_finite(l, "L");

    const Eigen::Index n = ext.n();
    const Matrix acl = ext.A - l * ext.C;
    const double ell = ext.ell();
    double best_margin = std::numeric_limits<double>::infinity();
    for (double eps : synthesis_eps_grid()) {
        const Matrix q = ext.E() + eps * Matrix::Identity(n, n);
        Matrix p;
        try {
            if (ell > 0.0) {
                p = solve_riccati_stabilizing(acl, ell * ell * Matrix::Identity(n, n), q);
            } else {
                if (!is_hurwitz(acl))
                    continue;
                p = symmetrize(solve_sylvester(acl.transpose(), acl, -q));
            }
        } catch (const ComputationError&) {
            continue;
        }
        if (!(min_eigenvalue_sym(p) > 0.0))
            continue;
        ObserverGain g;
        g.L = l;
        g.P = p;
        g.N = p * l;
        g.margin = verify_lmi(ext, g.P, g.N);
        g.ell_used = ell;
        g.eps = eps;
        best_margin = std::min(best_margin, g.margin);
        if (g.margin < 0.0)
            return g;
    }
    throw GainNotCertified("no slack in the grid certifies the given gain; best margin " +
                           std::to_string(best_margin));
}

} // namespace chaomask

#include "chaomask/errors.hpp"
#include "chaomask/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace chaomask {

namespace {

// Hamiltonian eigenvalues closer than this to the imaginary axis are rejected.
constexpr double kImagAxisTol = 1e-8;

std::string dims(const Matrix& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Newton iteration with determinant scaling. H must have no eigenvalue on the
// imaginary axis.
Matrix matrix_sign(const Matrix& h)
{
    const auto n = static_cast<double>(h.rows());
    Matrix z = h;
    bool scale = true;
    for (int iter = 0; iter < 100; ++iter) {
        Eigen::PartialPivLU<Matrix> lu(z);
        double c = 1.0;
        if (scale) {
            double logdet = 0.0;
            const Matrix& u = lu.matrixLU();
            for (Eigen::Index i = 0; i < u.rows(); ++i)
                logdet += std::log(std::abs(u(i, i)));
            c = std::exp(-logdet / n);
        }
        Matrix next = 0.5 * (c * z + lu.inverse() / c);
        const double change = (next - z).lpNorm<1>() / std::max(1.0, next.lpNorm<1>());
        z = std::move(next);
        if (!z.allFinite())
            throw NoStabilizingSolution("matrix sign iteration broke down");
        if (change < 1e-2)
            scale = false;
        if (change < 1e-14)
            break;
    }
    return z;
}

} // namespace

std::vector<double> Trajectory::times() const
{
    std::vector<double> out(states.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = time(i);
    return out;
}

void require_finite(const Matrix& m, std::string_view what)
{
    if (!m.allFinite())
        throw DomainError(std::string(what) + " has non-finite entries");
}

void require_square(const Matrix& m, std::string_view what)
{
    require_nonempty(m, what);
    if (m.rows() != m.cols())
        throw DimensionError(std::string(what) + " must be square, got " + dims(m));
}

void require_nonempty(const Matrix& m, std::string_view what)
{
    if (m.rows() == 0 || m.cols() == 0)
        throw DimensionError(std::string(what) + " must have positive dimensions");
}

Matrix symmetrize(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

double spectral_abscissa(const Matrix& a)
{
    require_square(a, "matrix");
    Eigen::EigenSolver<Matrix> es(a, false);
    return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& a, double tol)
{
    return spectral_abscissa(a) < tol;
}

double max_eigenvalue_sym(const Matrix& m)
{
    require_square(m, "matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double min_eigenvalue_sym(const Matrix& m)
{
    require_square(m, "matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

DefiniteCheck is_negative_definite(const Matrix& m, double margin)
{
    const double worst = max_eigenvalue_sym(m);
    return {worst < -margin, worst};
}

double min_singular_value_freq(const Matrix& a, const Matrix& c, double w)
{
    require_square(a, "A");
    if (c.cols() != a.cols())
        throw DimensionError("C must have " + std::to_string(a.cols()) + " columns, got " + dims(c));
    const Eigen::Index n = a.rows();
    const Eigen::Index p = c.rows();

    Matrix re(n + p, n);
    re << -a, c;
    Matrix im = Matrix::Zero(n + p, n);
    im.topRows(n).diagonal().setConstant(w);

    Matrix embed(2 * (n + p), 2 * n);
    embed << re, -im, im, re;
    Eigen::JacobiSVD<Matrix> svd(embed);
    return svd.singularValues().minCoeff();
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c)
{
    require_square(a, "A");
    require_square(b, "B");
    if (c.rows() != a.rows() || c.cols() != b.rows())
        throw DimensionError("Sylvester right-hand side has wrong shape " + dims(c));

    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.rows();
    const Matrix op = kron(Matrix::Identity(m, m), a) + kron(b.transpose(), Matrix::Identity(n, n));
    Eigen::PartialPivLU<Matrix> lu(op);
    if (!(lu.rcond() > 1e3 * std::numeric_limits<double>::epsilon()))
        throw NoSolutionError("Sylvester operator is singular (eigenvalues of A and -B coincide)");

    const Eigen::Map<const Vector> rhs(c.data(), c.size());
    Vector x = lu.solve(rhs);
    x += lu.solve(rhs - op * x); // one step of iterative refinement
    return Eigen::Map<Matrix>(x.data(), n, m);
}

Matrix solve_lyapunov(const Matrix& a_cl)
{
    require_square(a_cl, "A_cl");
    require_finite(a_cl, "A_cl");
    if (!is_hurwitz(a_cl))
        throw NoSolutionError("Lyapunov equation: A_cl is not Hurwitz");
    const Eigen::Index n = a_cl.rows();
    return symmetrize(solve_sylvester(a_cl.transpose(), a_cl, -Matrix::Identity(n, n)));
}

double riccati_residual(const Matrix& a, const Matrix& r, const Matrix& q, const Matrix& p)
{
    return (a.transpose() * p + p * a + p * r * p + q).norm();
}

Matrix solve_riccati(const Matrix& a, const Matrix& r, const Matrix& q, RiccatiBranch branch)
{
    require_square(a, "A");
    require_square(r, "R");
    require_square(q, "Q");
    if (r.rows() != a.rows() || q.rows() != a.rows())
        throw DimensionError("Riccati: R and Q must match A");
    require_finite(a, "A");
    require_finite(r, "R");
    require_finite(q, "Q");

    const Eigen::Index n = a.rows();
    Matrix h(2 * n, 2 * n);
    h << a, r, -q, -a.transpose();

    Eigen::EigenSolver<Matrix> es(h, false);
    if (es.info() != Eigen::Success)
        throw NoStabilizingSolution("Hamiltonian eigenvalues did not converge");
    if (es.eigenvalues().real().cwiseAbs().minCoeff() < kImagAxisTol)
        throw NoStabilizingSolution("Hamiltonian has an eigenvalue on the imaginary axis");

    // The stable subspace is the kernel of sign(H) + I, the unstable one the
    // kernel of sign(H) - I. With the subspace spanned by [I; P]:
    //   [S12; S22 + s I] P = -[S11 + s I; S21]
    const Matrix sgn = matrix_sign(h);
    const double s = branch == RiccatiBranch::Stabilizing ? 1.0 : -1.0;
    const Matrix eye = Matrix::Identity(n, n);
    Matrix lhs(2 * n, n);
    lhs << sgn.topRightCorner(n, n), sgn.bottomRightCorner(n, n) + s * eye;
    Matrix rhs(2 * n, n);
    rhs << sgn.topLeftCorner(n, n) + s * eye, sgn.bottomLeftCorner(n, n);
    Matrix p = symmetrize(lhs.colPivHouseholderQr().solve(-rhs));
    if (!p.allFinite())
        throw NoStabilizingSolution("invariant subspace is not a graph over the first block");

    // Newton refinement: (A + R P)^T D + D (A + R P) = -residual.
    double res = riccati_residual(a, r, q, p);
    for (int iter = 0; iter < 6 && res > 1e-14 * std::max(1.0, p.squaredNorm()); ++iter) {
        const Matrix ac = a + r * p;
        const Matrix resid = a.transpose() * p + p * a + p * r * p + q;
        Matrix step;
        try {
            step = solve_sylvester(ac.transpose(), ac, -resid);
        } catch (const NoSolutionError&) {
            break;
        }
        Matrix next = symmetrize(p + step);
        const double next_res = riccati_residual(a, r, q, next);
        if (!(next_res < res))
            break;
        p = std::move(next);
        res = next_res;
    }

    const double abscissa = spectral_abscissa(s * (a + r * p));
    if (!(abscissa < kHurwitzTol))
        throw NoStabilizingSolution(branch == RiccatiBranch::Stabilizing
                                        ? "A + R P is not Hurwitz"
                                        : "-(A + R P) is not Hurwitz");
    if (!(res < 1e-6 * std::max(1.0, p.squaredNorm())))
        throw SynthesisFailure("Riccati residual " + std::to_string(res) + " above tolerance");
    if (!(min_eigenvalue_sym(p) > 0.0))
        throw SynthesisFailure("Riccati solution is not positive definite");
    return p;
}

} // namespace chaomask

#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace chaomask {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default fixed integration step [s].
inline constexpr double kDefaultDt = 1e-3;

/// Largest real part an eigenvalue may have for a matrix to count as Hurwitz.
inline constexpr double kHurwitzTol = -1e-9;

/// States sampled on the uniform grid t0, t0 + dt, t0 + 2 dt, ...
struct Trajectory {
    double t0 = 0.0;
    double dt = kDefaultDt;
    std::vector<Vector> states;

    std::size_t size() const noexcept { return states.size(); }
    double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
    std::vector<double> times() const;
};

using VectorField = std::function<Vector(double, const Vector&)>;

// --- argument checks shared by every module -------------------------------

void require_finite(const Matrix& m, std::string_view what);
void require_square(const Matrix& m, std::string_view what);
void require_nonempty(const Matrix& m, std::string_view what);

Matrix symmetrize(const Matrix& m);

// --- integration ------------------------------------------------------------

/// Number of fixed steps that cover [0, t_end]; t_end must be a multiple of dt
/// to within one part in 1e9.
std::size_t step_count(double dt, double t_end);

/// One classical Runge-Kutta step.
Vector rk4_step(const VectorField& field, double t, const Vector& x, double dt);

/// Fixed-step RK4 from t = 0 to t_end. Throws IntegrationDiverged at the first
/// non-finite state.
Trajectory integrate_rk4(const VectorField& field, const Vector& x0, double dt, double t_end);

// --- eigen-structure --------------------------------------------------------

/// Largest real part over the spectrum.
double spectral_abscissa(const Matrix& a);

bool is_hurwitz(const Matrix& a, double tol = kHurwitzTol);

double max_eigenvalue_sym(const Matrix& m);
double min_eigenvalue_sym(const Matrix& m);

struct DefiniteCheck {
    bool negative_definite;
    double worst_eigenvalue;
};

/// Symmetrizes M and reports whether its largest eigenvalue is below -margin.
DefiniteCheck is_negative_definite(const Matrix& m, double margin = 0.0);

/// Smallest singular value of the complex matrix [jwI - A; C], computed on the
/// real embedding [[X, -Y], [Y, X]].
double min_singular_value_freq(const Matrix& a, const Matrix& c, double w);

// --- matrix equations -------------------------------------------------------

/// Solves A X + X B = C. Throws NoSolutionError when the operator is singular.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);

/// Returns S with S A + A^T S = -I. A must be Hurwitz.
Matrix solve_lyapunov(const Matrix& a_cl);

enum class RiccatiBranch {
    Stabilizing,     ///< A + R P Hurwitz (minimal solution)
    AntiStabilizing, ///< -(A + R P) Hurwitz (maximal solution)
};

/// Solves A^T P + P A + P R P + Q = 0 from an invariant subspace of the
/// Hamiltonian [[A, R], [-Q, -A^T]], selected by `branch`.
///
/// The subspace comes from the matrix sign function, followed by Newton
/// refinement on the residual. The returned P is symmetric positive definite
/// with residual below 1e-6 max(1, |P|_F^2).
///
/// Throws NoStabilizingSolution when the Hamiltonian has an eigenvalue within
/// 1e-8 of the imaginary axis or the closed loop misses the requested half
/// plane, and SynthesisFailure when P is not positive definite.
Matrix solve_riccati(const Matrix& a, const Matrix& r, const Matrix& q, RiccatiBranch branch);

inline Matrix solve_riccati_stabilizing(const Matrix& a, const Matrix& r, const Matrix& q)
{
    return solve_riccati(a, r, q, RiccatiBranch::Stabilizing);
}

/// Frobenius norm of A^T P + P A + P R P + Q.
double riccati_residual(const Matrix& a, const Matrix& r, const Matrix& q, const Matrix& p);

} // namespace chaomask

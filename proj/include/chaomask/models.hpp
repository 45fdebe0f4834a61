#pragma once

#include <optional>
#include <vector>

#include "chaomask/numerics.hpp"

namespace chaomask {

/// x' = A x + B u, y = C x. (A, C) must be observable.
class LtiPlant {
public:
    LtiPlant(Matrix a, Matrix b, Matrix c);

    const Matrix& A() const noexcept { return a_; }
    const Matrix& B() const noexcept { return b_; }
    const Matrix& C() const noexcept { return c_; }

    Eigen::Index nx() const noexcept { return a_.rows(); }
    Eigen::Index nu() const noexcept { return b_.cols(); }
    Eigen::Index ny() const noexcept { return c_.rows(); }

private:
    Matrix a_;
    Matrix b_;
    Matrix c_;
};

/// Rank of [C; CA; ...; CA^{n-1}] equals n, with rank tolerance
/// 1e-8 times the largest singular value.
bool is_observable(const Matrix& a, const Matrix& c);

struct Monomial {
    double coeff = 0.0;
    std::vector<int> exponents; // one per input component
};

/// Vector-valued polynomial; each output component is a sum of monomials.
class PolynomialMap {
public:
    PolynomialMap(int n_in, int n_out);

    void add_term(int output, double coeff, std::vector<int> exponents);

    int n_in() const noexcept { return n_in_; }
    int n_out() const noexcept { return n_out_; }
    const std::vector<Monomial>& terms(int output) const { return terms_.at(static_cast<std::size_t>(output)); }
    bool is_zero() const noexcept;

    Vector eval(const Vector& v) const;
    Matrix jacobian(const Vector& v) const;

private:
    int n_in_;
    int n_out_;
    std::vector<std::vector<Monomial>> terms_;
};

inline Vector eval_map(const PolynomialMap& m, const Vector& v) { return m.eval(v); }
inline Matrix jacobian(const PolynomialMap& m, const Vector& v) { return m.jacobian(v); }

/// Chaotic generator xi' = Phi xi + phi(xi), d = Lambda xi.
///
/// sigma, ell and d_bound are estimated from simulation and stay unset until
/// `populate_mask` (or an explicit override) fills them in.
struct ChaoticMask {
    Matrix Phi;
    PolynomialMap phi{0, 0};
    Matrix Lambda; // n_y x n_xi; may be empty until a plant is chosen
    std::optional<Vector> sigma;
    std::optional<double> ell;
    std::optional<double> d_bound;

    Eigen::Index n_xi() const noexcept { return Phi.rows(); }
    bool populated() const noexcept { return sigma && ell && d_bound; }
    Vector derivative(const Vector& xi) const { return Phi * xi + phi.eval(xi); }
};

/// Rossler prototype-4: Phi = [[0,-1,-1],[1,0,0],[0,a,-b]], phi_3 = -a xi_2^2.
ChaoticMask rossler_p4(double a, double b);

/// Coordinate change xi' = T xi with T = diag(1, ..., 1, 1/beta). Lambda is
/// kept; the estimates are cleared.
ChaoticMask scale_mask(const ChaoticMask& mask, double beta);

/// Same, for an arbitrary positive diagonal T.
ChaoticMask transform_mask(const ChaoticMask& mask, const Vector& t_diag);

struct BoxOptions {
    double t_settle = 100.0;
    double t_obs = 500.0;
    double margin = 0.1;
    int grid_per_axis = 21;
    double dt = kDefaultDt;
};

struct BoxEstimate {
    Vector sigma;   // (1 + margin) * max |xi_i| over the observation window
    double d_bound; // (1 + margin) * max |Lambda xi| over the same window; 0 without Lambda
};

/// Simulates the mask from xi0 and bounds the observed attractor.
/// Throws NotBoundedError when |xi| exceeds 1e6.
BoxEstimate estimate_invariant_box(const ChaoticMask& mask, const Vector& xi0, double t_settle,
                                   double t_obs, double margin, double dt = kDefaultDt);

/// 1.05 times the largest spectral norm of the phi Jacobian over a uniform
/// grid on [-sigma, sigma]. Requires sigma.
double estimate_lipschitz(const ChaoticMask& mask, int grid_per_axis = 21);

/// Fills sigma, d_bound and ell.
ChaoticMask populate_mask(ChaoticMask mask, const Vector& xi0, const BoxOptions& opts = {});

/// Componentwise clamp into [-sigma_i, sigma_i].
Vector saturate(const Vector& v, const Vector& sigma);

/// Stacked state col(xi, x):
///   A = diag(Phi, A_p), B = [0; B_p], G(xi) = [phi(xi); 0], C = [Lambda C_p].
struct ExtendedSystem {
    Matrix A;
    Matrix B;
    PolynomialMap G{0, 0};
    Matrix C;
    ChaoticMask mask;
    LtiPlant plant;

    Eigen::Index n_xi() const noexcept { return mask.n_xi(); }
    Eigen::Index nx() const noexcept { return plant.nx(); }
    Eigen::Index n() const noexcept { return A.rows(); }
    double ell() const { return *mask.ell; }

    /// diag(I_{n_xi}, 0)
    Matrix E() const;
};

ExtendedSystem build_extended(const LtiPlant& plant, const ChaoticMask& mask);

} // namespace chaomask

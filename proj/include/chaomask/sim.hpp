#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chaomask/attacks.hpp"
#include "chaomask/models.hpp"

namespace chaomask {

/// u = u_ref - K xhat (plant part of the estimate).
struct Controller {
    Matrix K;
    Vector u_ref; ///< empty means zero
};

struct Scenario {
    explicit Scenario(LtiPlant p) : plant(std::move(p)) {}

    LtiPlant plant;
    std::optional<ChaoticMask> mask;      ///< populated mask; absent for the unprotected baseline
    std::optional<Controller> controller; ///< absent: open loop, u = 0
    Matrix L;                             ///< (n_xi + n_x) x n_y when masked, n_x x n_y otherwise
    std::optional<Matrix> P;              ///< observer certificate, used for V monitoring only
    double detector_nu = 0.0;
    AttackSpec attack = NoAttack{};
    Vector x0;
    Vector xi0;   ///< masked only
    Vector xhat0; ///< full estimator state: col(xihat, xhat) when masked
    Vector xa0;   ///< eavesdropper initial estimate; zero when empty
    double dt = kDefaultDt;
    double t_end = 60.0;
    double t_settle = 30.0;
    double tol_ss = 1e-6;

    bool masked() const noexcept { return mask.has_value(); }
    Eigen::Index estimator_dim() const;
};

/// Dimension and consistency checks, A - B K Hurwitz when a controller is
/// present. Throws DimensionError / ConfigError / DomainError.
void validate_scenario(const Scenario& s);

/// Copy of `s` with the attack removed (eavesdropping is kept since it does
/// not touch the channel).
Scenario clean_variant(const Scenario& s);

struct SimTrace {
    double dt = kDefaultDt;
    double t_settle = 0.0;
    bool masked = false;
    Eigen::Index nx = 0;
    Eigen::Index nxi = 0;
    std::string attack = "none";
    std::optional<double> attack_start;

    std::vector<double> t;
    std::vector<Vector> x, xi, xhat, y, ybold, chan, z, u, xa;
    std::vector<double> g;        ///< z^T z
    std::vector<char> alarm;      ///< 1 for H1
    std::vector<double> err_norm; ///< |true state - estimate| over the estimator's state
    std::optional<double> first_alarm;

    std::size_t size() const noexcept { return t.size(); }
    /// col(xi, x) - xhat when masked, x - xhat otherwise.
    Vector estimation_error(std::size_t k) const;
    /// Plant block of the estimation error.
    Vector plant_error(std::size_t k) const;
};

/// Fixed-step co-simulation of plant, mask, channel (with attack), estimator
/// and eavesdropper. Deterministic. Throws IntegrationDiverged when the joint
/// state norm exceeds 1e9.
SimTrace run_scenario(const Scenario& s);

struct Detection {
    std::vector<char> alarm;
    std::optional<double> first_alarm;
};

/// H1 iff z^T z > nu. The first alarm is the earliest H1 at or after t_arm.
Detection detect(const SimTrace& trace, double nu, double t_arm = 0.0);

inline constexpr double kNuFloor = 1e-12;

/// safety * max z^T z over t >= trace.t_settle. May return 0; callers apply
/// kNuFloor.
double calibrate_threshold(const SimTrace& clean, double safety);

struct EstimationMetrics {
    double terminal_error = 0.0;
    double sup_error_after_settle = 0.0;
    std::optional<double> rate; ///< fitted decay rate; unset when the error is identically zero
    double r_squared = 0.0;
    double fit_t0 = 0.0;
    double fit_t1 = 0.0;
};

/// Least-squares fit of log |x~| against t on the decay segment: from t = 0
/// up to the attack onset (or t_settle) and while |x~| is above 1e-10 of its
/// peak.
EstimationMetrics estimation_metrics(const SimTrace& trace);

struct Stealthiness {
    double sup = 0.0;
    std::vector<double> t;
    std::vector<Vector> delta_z;
};

/// Delta z = z_attacked - z_clean over the attack window.
Stealthiness stealthiness_metric(const SimTrace& attacked, const SimTrace& clean);

/// max |z| over [t0, t1].
double sup_innovation(const SimTrace& trace, double t0, double t1);

/// Relative size below which an estimation error is integration round-off.
inline constexpr double kRoundoffError = 1e-11;

/// Largest relative increase of V = x~^T P x~ between consecutive steps;
/// <= 0 means nonincreasing. Steps whose error is below kRoundoffError times
/// the state norm are skipped.
double lyapunov_worst_increase(const SimTrace& trace, const Matrix& p);

/// Whether |z| < tol over [t_start - tau, t_start).
bool replay_premise_holds(const SimTrace& trace, const ReplayAttack& r, double tol);

void write_trace_csv(const SimTrace& trace, const std::string& path);

} // namespace chaomask

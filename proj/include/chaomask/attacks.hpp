#pragma once

// Adversaries acting on the sensor-to-estimator channel. Their threat model
// gives them the unmasked system {A, B, C, L} and nothing about the mask, so
// every attacker here is built from AttackerKnowledge alone.

#include <type_traits>
#include <variant>

#include "chaomask/models.hpp"
#include "chaomask/numerics.hpp"

namespace chaomask {

/// What an attacker is assumed to know: the plant and the plain observer gain.
struct AttackerKnowledge {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix L; ///< gain of the unmasked estimator (may be empty when unused)

    static AttackerKnowledge from_plant(const LtiPlant& plant, Matrix l = {});
};

// --- attack specifications --------------------------------------------------

/// Bounded perturbation M * direction * shape(t) with |shape| <= 1, so that
/// |phi(t)| <= M holds by construction.
struct PhiSignal {
    enum class Shape { Constant, Sine };

    Vector direction; ///< unit vector in output space
    Shape shape = Shape::Constant;
    double omega = 1.0; ///< rad/s, Sine only

    Vector eval(double magnitude, double t_since_onset) const;
};

struct NoAttack {};

struct EavesdropAttack {
    Matrix L_bar;
};

struct ReplayAttack {
    double tau = 5.0;
    double t_start = 40.0;
};

struct FdiAttack {
    double M = 0.5;
    double t_start = 30.0;
    PhiSignal signal;
};

using AttackSpec = std::variant<NoAttack, EavesdropAttack, ReplayAttack, FdiAttack>;

/// Checks tau > 0, M > 0, t_start >= 0 and a unit-norm phi direction of
/// length `ny`. Throws ConfigError.
void validate_attack(const AttackSpec& spec, Eigen::Index ny);

const char* attack_name(const AttackSpec& spec);

// --- eavesdropping ----------------------------------------------------------

/// x_a' = A x_a + B u + L_bar (y_channel - C x_a)
class EavesdropperObserver {
public:
    EavesdropperObserver(const AttackerKnowledge& k, Matrix l_bar);

    const Matrix& L_bar() const noexcept { return l_bar_; }
    Vector derivative(const Vector& xhat_a, const Vector& u, const Vector& y_channel) const;

private:
    Matrix a_, b_, c_;
    Matrix l_bar_;
};

/// Throws DomainError unless A - L_bar C is Hurwitz.
EavesdropperObserver make_eavesdropper(const LtiPlant& plant, const Matrix& l_bar);

/// 2 lambda_max(S)^2 |L_bar| eps / lambda_min(S) with
/// S (A - L_bar C) + (A - L_bar C)^T S = -I.
double eavesdrop_error_bound(const LtiPlant& plant, const Matrix& l_bar, double eps);

// --- replay -----------------------------------------------------------------

/// Channel output under replay: inside [t_start, t_start + tau] the recorded
/// sample nearest to t - tau, otherwise `live`. Throws ConfigError when the
/// needed sample is not in the recording.
Vector replay_channel(const Trajectory& recording, double tau, double t_start, double t, const Vector& live);

// --- false data injection -----------------------------------------------------

struct FdiAttackerState {
    Vector delta_xhat; ///< zero at onset
};

/// Attacker-side model of the estimator perturbation,
/// dx' = (A - L C) dx + L a.
class FdiAttacker {
public:
    explicit FdiAttacker(const AttackerKnowledge& k);

    FdiAttackerState initial_state() const;
    const Matrix& C() const noexcept { return c_; }
    Vector derivative(const Vector& delta_xhat, const Vector& a) const;

private:
    Matrix a_cl_, l_, c_;
};

/// a = C dx + phi_t, then dx advanced one RK4 step with a held constant.
Vector fdi_step(FdiAttackerState& state, const FdiAttacker& attacker, const Vector& phi_t, double dt);

// The threat model forbids attacker access to mask parameters.
static_assert(!std::is_constructible_v<EavesdropperObserver, const ChaoticMask&, Matrix>);
static_assert(!std::is_constructible_v<EavesdropperObserver, const ExtendedSystem&, Matrix>);
static_assert(!std::is_constructible_v<FdiAttacker, const ChaoticMask&>);
static_assert(!std::is_constructible_v<FdiAttacker, const ExtendedSystem&>);
static_assert(!std::is_constructible_v<AttackerKnowledge, const ChaoticMask&>);

} // namespace chaomask

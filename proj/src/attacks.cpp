#include "chaomask/attacks.hpp"

#include <cmath>
#include <string>

#include "chaomask/errors.hpp"

namespace chaomask {

AttackerKnowledge AttackerKnowledge::from_plant(const LtiPlant& plant, Matrix l)
{
    return {plant.A(), plant.B(), plant.C(), std::move(l)};
}

Vector PhiSignal::eval(double magnitude, double t_since_onset) const
{
    const double s = shape == Shape::Sine ? std::sin(omega * t_since_onset) : 1.0;
    return magnitude * s * direction;
}

void validate_attack(const AttackSpec& spec, Eigen::Index ny)
{
    if (const auto* r = std::get_if<ReplayAttack>(&spec)) {
        if (!(r->tau > 0.0))
            throw ConfigError("replay tau must be positive");
        if (!(r->t_start >= 0.0))
            throw ConfigError("replay t_start must be nonnegative");
        if (r->t_start - r->tau < 0.0)
            throw ConfigError("replay needs a recording window [t_start - tau, t_start] inside the run");
    } else if (const auto* f = std::get_if<FdiAttack>(&spec)) {
        if (!(f->M > 0.0))
            throw ConfigError("FDI bound M must be positive");
        if (!(f->t_start >= 0.0))
            throw ConfigError("FDI t_start must be nonnegative");
        if (f->signal.direction.size() != ny)
            throw ConfigError("FDI direction must have " + std::to_string(ny) + " entries");
        if (std::abs(f->signal.direction.norm() - 1.0) > 1e-12)
            throw ConfigError("FDI direction must have unit norm");
        if (f->signal.shape == PhiSignal::Shape::Sine && !std::isfinite(f->signal.omega))
            throw ConfigError("FDI omega must be finite");
    } else if (const auto* e = std::get_if<EavesdropAttack>(&spec)) {
        if (e->L_bar.cols() != ny)
            throw ConfigError("eavesdropper gain must have " + std::to_string(ny) + " columns");
    }
}

const char* attack_name(const AttackSpec& spec)
{
    static constexpr const char* names[] = {"none", "eavesdrop", "replay", "fdi"};
    return names[spec.index()];
}

// --- eavesdropping ----------------------------------------------------------

EavesdropperObserver::EavesdropperObserver(const AttackerKnowledge& k, Matrix l_bar)
    : a_(k.A), b_(k.B), c_(k.C), l_bar_(std::move(l_bar))
{
    if (l_bar_.rows() != a_.rows() || l_bar_.cols() != c_.rows())
        throw DimensionError("L_bar must be " + std::to_string(a_.rows()) + "x" + std::to_string(c_.rows()));
    require_finite(l_bar_, "L_bar");
    if (!is_hurwitz(a_ - l_bar_ * c_))
        throw DomainError("A - L_bar C is not Hurwitz");
}

Vector EavesdropperObserver::derivative(const Vector& xhat_a, const Vector& u, const Vector& y_channel) const
{
    return a_ * xhat_a + b_ * u + l_bar_ * (y_channel - c_ * xhat_a);
}

EavesdropperObserver make_eavesdropper(const LtiPlant& plant, const Matrix& l_bar)
{
    return EavesdropperObserver(AttackerKnowledge::from_plant(plant), l_bar);
}

double eavesdrop_error_bound(const LtiPlant& plant, const Matrix& l_bar, double eps)
{
    if (!(eps >= 0.0))
        throw DomainError("eps must be nonnegative");
    if (l_bar.rows() != plant.nx() || l_bar.cols() != plant.ny())
        throw DimensionError("L_bar has wrong dimensions");
    const Matrix s = solve_lyapunov(plant.A() - l_bar * plant.C());
    const double hi = max_eigenvalue_sym(s);
    const double lo = min_eigenvalue_sym(s);
    // Induced 2-norm of L_bar.
    const double l_norm = Eigen::JacobiSVD<Matrix>(l_bar).singularValues()(0);
    return 2.0 * hi * hi * l_norm * eps / lo;
}

// --- replay -----------------------------------------------------------------

Vector replay_channel(const Trajectory& recording, double tau, double t_start, double t, const Vector& live)
{
    if (!(tau > 0.0))
        throw ConfigError("replay tau must be positive");
    if (t < t_start || t > t_start + tau)
        return live;
    const double idx = std::round((t - tau - recording.t0) / recording.dt);
    if (idx < 0.0 || idx >= static_cast<double>(recording.size()))
        throw ConfigError("replay recording does not cover t - tau = " + std::to_string(t - tau) + " s");
    return recording.states[static_cast<std::size_t>(idx)];
}

// --- false data injection -----------------------------------------------------

FdiAttacker::FdiAttacker(const AttackerKnowledge& k) : l_(k.L), c_(k.C)
{
    if (l_.rows() != k.A.rows() || l_.cols() != k.C.rows())
        throw DimensionError("FDI attacker needs the estimator gain L (" + std::to_string(k.A.rows()) + "x" +
                             std::to_string(k.C.rows()) + ")");
    a_cl_ = k.A - l_ * c_;
}

FdiAttackerState FdiAttacker::initial_state() const
{
    return {Vector::Zero(a_cl_.rows())};
}

Vector FdiAttacker::derivative(const Vector& delta_xhat, const Vector& a) const
{
    return a_cl_ * delta_xhat + l_ * a;
}

Vector fdi_step(FdiAttackerState& state, const FdiAttacker& attacker, const Vector& phi_t, double dt)
{
    const Vector a = attacker.C() * state.delta_xhat + phi_t;
    const VectorField field = [&](double, const Vector& dx) { return attacker.derivative(dx, a); };
    state.delta_xhat = rk4_step(field, 0.0, state.delta_xhat, dt);
    return a;
}

} // namespace chaomask

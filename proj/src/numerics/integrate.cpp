#include "chaomask/errors.hpp"
#include "chaomask/numerics.hpp"

#include <cmath>

namespace chaomask {

std::size_t step_count(double dt, double t_end)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw DomainError("integration step must be positive");
    if (!(t_end >= dt) || !std::isfinite(t_end))
        throw DomainError("t_end must be at least one step");
    const double ratio = t_end / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * steps)
        throw DomainError("t_end must be an integer multiple of dt");
    return static_cast<std::size_t>(steps);
}

Vector rk4_step(const VectorField& field, double t, const Vector& x, double dt)
{
    const double half = 0.5 * dt;
    const Vector k1 = field(t, x);
    const Vector k2 = field(t + half, x + half * k1);
    const Vector k3 = field(t + half, x + half * k2);
    const Vector k4 = field(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate_rk4(const VectorField& field, const Vector& x0, double dt, double t_end)
{
    const std::size_t n = step_count(dt, t_end);
    if (!x0.allFinite())
        throw IntegrationDiverged("initial state is not finite", 0.0);

    Trajectory traj;
    traj.t0 = 0.0;
    traj.dt = dt;
    traj.states.reserve(n + 1);
    traj.states.push_back(x0);
    for (std::size_t i = 0; i < n; ++i) {
        Vector next = rk4_step(field, traj.time(i), traj.states.back(), dt);
        if (!next.allFinite())
            throw IntegrationDiverged("state became non-finite", traj.time(i + 1));
        traj.states.push_back(std::move(next));
    }
    return traj;
}

} // namespace chaomask

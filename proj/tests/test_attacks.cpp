#include <doctest.h>

#include "chaomask/attacks.hpp"
#include "chaomask/errors.hpp"
#include "oracles.hpp"

using namespace chaomask;

namespace {

LtiPlant scalar_plant()
{
    return LtiPlant(-Matrix::Identity(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
}

Trajectory ramp_recording(std::size_t n, double dt)
{
    Trajectory r;
    r.dt = dt;
    for (std::size_t k = 0; k < n; ++k)
        r.states.push_back(Vector::Constant(2, static_cast<double>(k)));
    return r;
}

} // namespace

TEST_CASE("eavesdrop bound closed form")
{
    CHECK(eavesdrop_error_bound(scalar_plant(), Matrix::Ones(1, 1), 1.0) == doctest::Approx(0.5));
    CHECK(eavesdrop_error_bound(scalar_plant(), Matrix::Ones(1, 1), 0.2) == doctest::Approx(0.1));
    CHECK(eavesdrop_error_bound(scalar_plant(), Matrix::Ones(1, 1), 0.0) == 0.0);
    CHECK_THROWS_AS(eavesdrop_error_bound(scalar_plant(), Matrix::Ones(1, 1), -1.0), DomainError);
    CHECK_THROWS_AS(eavesdrop_error_bound(scalar_plant(), -2.0 * Matrix::Ones(1, 1), 1.0), NoSolutionError);
}

TEST_CASE("eavesdropper construction requires a stabilizing gain")
{
    const LtiPlant p(oracle::b747_A(), oracle::b747_B(), oracle::b747_C());
    CHECK_NOTHROW(make_eavesdropper(p, oracle::b747_L()));
    CHECK_THROWS_AS(make_eavesdropper(p, Matrix::Zero(4, 2)), DomainError);
    CHECK_THROWS_AS(make_eavesdropper(p, Matrix::Zero(2, 4)), DimensionError);
}

TEST_CASE("eavesdropper follows the observer equation")
{
    const EavesdropperObserver e = make_eavesdropper(scalar_plant(), Matrix::Ones(1, 1));
    const Vector d = e.derivative(Vector::Constant(1, 2.0), Vector::Constant(1, 0.5), Vector::Constant(1, 3.0));
    // -2 + 0.5 + (3 - 2)
    CHECK(d(0) == doctest::Approx(-0.5));
}

TEST_CASE("replay channel window")
{
    const Trajectory rec = ramp_recording(100, 0.5);
    const Vector live = Vector::Constant(2, -1.0);
    CHECK(replay_channel(rec, 5.0, 40.0, 39.5, live) == live);
    CHECK(replay_channel(rec, 5.0, 40.0, 45.5, live) == live);
    // t = t_start -> sample at t_start - tau = 35 s = index 70
    CHECK(replay_channel(rec, 5.0, 40.0, 40.0, live)(0) == 70.0);
    CHECK(replay_channel(rec, 5.0, 40.0, 45.0, live)(0) == 80.0);
    // Nearest-sample lookup.
    CHECK(replay_channel(rec, 5.0, 40.0, 42.26, live)(0) == 75.0);
    CHECK_THROWS_AS(replay_channel(ramp_recording(10, 0.5), 5.0, 40.0, 40.0, live), ConfigError);
    CHECK_THROWS_AS(replay_channel(rec, 0.0, 40.0, 40.0, live), ConfigError);
}

TEST_CASE("replay of a constant equilibrium is invisible")
{
    Trajectory rec;
    rec.dt = 0.1;
    const Vector eq = (Vector(2) << 0.3, -1.2).finished();
    rec.states.assign(500, eq);
    for (double t = 0.0; t < 49.0; t += 0.37)
        CHECK(replay_channel(rec, 5.0, 40.0, t, eq) == eq);
}

TEST_CASE("fdi attack at onset is the perturbation itself")
{
    const AttackerKnowledge k =
        AttackerKnowledge::from_plant(LtiPlant(oracle::b747_A(), oracle::b747_B(), oracle::b747_C()), oracle::b747_L());
    const FdiAttacker att(k);
    FdiAttackerState st = att.initial_state();
    CHECK(st.delta_xhat.isZero());

    PhiSignal sig;
    sig.direction = (Vector(2) << 1.0, 0.0).finished();
    const Vector a = fdi_step(st, att, sig.eval(0.5, 0.0), 1e-3);
    CHECK(a == (Vector(2) << 0.5, 0.0).finished());
    CHECK_FALSE(st.delta_xhat.isZero());

    // The attack then tracks C dx + phi.
    const Vector dx = st.delta_xhat;
    const Vector a2 = fdi_step(st, att, sig.eval(0.5, 1e-3), 1e-3);
    CHECK((a2 - (oracle::b747_C() * dx + sig.eval(0.5, 1e-3))).norm() == 0.0);

    CHECK_THROWS_AS(FdiAttacker(AttackerKnowledge::from_plant(
                        LtiPlant(oracle::b747_A(), oracle::b747_B(), oracle::b747_C()))),
                    DimensionError);
}

TEST_CASE("phi signal respects its bound")
{
    PhiSignal s;
    s.direction = (Vector(2) << 0.6, 0.8).finished();
    s.shape = PhiSignal::Shape::Sine;
    s.omega = 3.0;
    for (double t = 0.0; t < 10.0; t += 0.01)
        CHECK(s.eval(0.5, t).norm() <= 0.5 + 1e-15);
}

TEST_CASE("attack validation")
{
    CHECK_NOTHROW(validate_attack(NoAttack{}, 2));
    CHECK_THROWS_AS(validate_attack(ReplayAttack{0.0, 40.0}, 2), ConfigError);
    CHECK_THROWS_AS(validate_attack(ReplayAttack{5.0, 3.0}, 2), ConfigError);
    FdiAttack f;
    f.signal.direction = (Vector(2) << 1.0, 0.0).finished();
    CHECK_NOTHROW(validate_attack(f, 2));
    f.M = 0.0;
    CHECK_THROWS_AS(validate_attack(f, 2), ConfigError);
    f.M = 0.5;
    f.signal.direction = (Vector(2) << 1.0, 1.0).finished();
    CHECK_THROWS_AS(validate_attack(f, 2), ConfigError);
    f.signal.direction = Vector::Ones(3) / std::sqrt(3.0);
    CHECK_THROWS_AS(validate_attack(f, 2), ConfigError);
    CHECK_THROWS_AS(validate_attack(EavesdropAttack{Matrix::Zero(4, 3)}, 2), ConfigError);

    CHECK(std::string(attack_name(NoAttack{})) == "none");
    CHECK(std::string(attack_name(ReplayAttack{})) == "replay");
    CHECK(std::string(attack_name(f)) == "fdi");
}

TEST_CASE("attackers cannot be built from mask information")
{
    CHECK_FALSE(std::is_constructible_v<EavesdropperObserver, const ChaoticMask&, Matrix>);
    CHECK_FALSE(std::is_constructible_v<FdiAttacker, const ExtendedSystem&>);
    CHECK_FALSE(std::is_constructible_v<AttackerKnowledge, const ChaoticMask&>);
    CHECK(std::is_constructible_v<FdiAttacker, const AttackerKnowledge&>);
}

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chaomask/commands.hpp"
#include "chaomask/errors.hpp"
#include "oracles.hpp"

using namespace chaomask;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const Study& scaled_study()
{
    static const Study s = prepare_study(load_scenario("paper_b747"));
    return s;
}

const Study& unscaled_study()
{
    static const Study s = prepare_study(load_scenario("paper_b747"), MaskChoice{true, std::nullopt});
    return s;
}

const ObserverGain& certified_gain()
{
    static const ObserverGain g = synthesize_gain(*scaled_study().ext);
    return g;
}

void distance_reproduction(Outcome& o)
{
    auto t0 = std::chrono::steady_clock::now();
    const auto r0 = distance_to_unobservability(unscaled_study().ext->A, unscaled_study().ext->C);
    const double s0 = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const auto r1 = distance_to_unobservability(scaled_study().ext->A, scaled_study().ext->C);
    const double s1 = seconds_since(t0);
    o.detail << "delta unscaled " << r0.delta << " (" << s0 << " s), scaled " << r1.delta << " (" << s1 << " s)";
    o.require(r0.delta >= 0.3 && r0.delta <= 0.5, "unscaled delta in [0.3, 0.5]");
    o.require(r1.delta >= 0.2 && r1.delta <= 0.4, "scaled delta in [0.2, 0.4]");
    o.require(s0 < 10.0 && s1 < 10.0, "runtime < 10 s");
}

void lipschitz_reproduction(Outcome& o)
{
    const double ell = *scaled_study().mask->ell;
    const double ell_raw = *unscaled_study().mask->ell;
    const auto r0 = distance_to_unobservability(unscaled_study().ext->A, unscaled_study().ext->C);
    const auto r1 = distance_to_unobservability(scaled_study().ext->A, scaled_study().ext->C);
    o.detail << "ell scaled " << ell << ", unscaled " << ell_raw;
    o.require(ell <= 0.03, "ell <= 0.03");
    o.require(ell >= 0.025 / 2.0 && ell <= 0.025 * 2.0, "within 2x of 0.025");
    o.require(!check_sufficiency(r0, 2.5), "unscaled insufficient with the 2.5 bound");
    o.require(!check_sufficiency(r0, ell_raw), "unscaled insufficient with the estimated ell");
    o.require(check_sufficiency(r1, ell), "scaled sufficient");
}

void synthesis_feasibility(Outcome& o)
{
    const ObserverGain& g = certified_gain();
    o.detail << "margin " << g.margin;
    o.require(g.margin < 0.0, "certified margin < 0");
    o.require(verify_lmi(*scaled_study().ext, g.P, g.N) < 0.0, "independent LMI check");

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    double worst_time = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        Scenario s = build_run(scaled_study(), &g, true, RunKind::None);
        s.t_end = 40.0;
        s.t_settle = 20.0;
        Vector truth(7);
        truth << s.xi0, s.x0;
        Vector e0(7);
        for (int k = 0; k < 7; ++k)
            e0(k) = ud(rng);
        s.xhat0 = truth - e0;
        const SimTrace t = run_scenario(s);
        // Last time the error is at or above 1e-6.
        double t_below = 0.0;
        for (std::size_t k = 0; k < t.size(); ++k)
            if (t.err_norm[k] >= 1e-6)
                t_below = t.t[k] + t.dt;
        worst_time = std::max(worst_time, t_below);
        o.require(t.err_norm.back() < 1e-6, "error below 1e-6 within 40 s");
    }
    o.detail << ", error below 1e-6 after " << worst_time << " s";
}

void eavesdrop_contrast(Outcome& o)
{
    const auto u = summarize(scaled_study(),
                             run_experiment(scaled_study(), nullptr, false, RunKind::Eavesdrop));
    const auto m = summarize(scaled_study(),
                             run_experiment(scaled_study(), &certified_gain(), true, RunKind::Eavesdrop));
    const double u_term = u["eavesdrop_terminal_error"];
    const double m_avg = m["eavesdrop_mean_error_last10"];
    const double bound = m["eavesdrop_bound"];
    o.detail << "unmasked terminal " << u_term << ", masked mean " << m_avg << ", bound " << bound;
    o.require(u_term < 1e-4, "unmasked terminal < 1e-4");
    o.require(m_avg > 10.0 * u_term, "masked mean > 10x unmasked");
    o.require(m_avg < bound, "masked mean < bound");
}

void replay_contrast(Outcome& o)
{
    const Experiment u = run_experiment(scaled_study(), nullptr, false, RunKind::Replay);
    const Experiment m = run_experiment(scaled_study(), &certified_gain(), true, RunKind::Replay);
    const auto ju = summarize(scaled_study(), u);
    const auto jm = summarize(scaled_study(), m);
    const double sup_u = ju["replay_sup_z"];
    o.detail << "unmasked sup|z| " << sup_u << " (nu " << u.nu << "), masked first alarm ";
    if (m.trace.first_alarm)
        o.detail << *m.trace.first_alarm << " s";
    else
        o.detail << "none";
    o.require(ju["replay_premise_holds"].get<bool>() && jm["replay_premise_holds"].get<bool>(),
              "steady state before replay");
    o.require(sup_u * sup_u <= u.nu, "unmasked g below nu in the window");
    o.require(!u.trace.first_alarm.has_value(), "no unmasked alarm");
    o.require(jm["replay_detected_within_1s"].get<bool>(), "masked alarm within 1 s");
}

void fdi_contrast(Outcome& o)
{
    const auto u = summarize(scaled_study(), run_experiment(scaled_study(), nullptr, false, RunKind::Fdi, 0.5));
    const auto m =
        summarize(scaled_study(), run_experiment(scaled_study(), &certified_gain(), true, RunKind::Fdi, 0.5));
    const double su = u["fdi_sup_delta_z"];
    const double sm = m["fdi_sup_delta_z"];
    const double id = u["fdi_identity_deviation"];
    o.detail << "unmasked sup|dz| " << su << " (identity dev " << id << "), masked " << sm;
    o.require(su <= 0.5 + 1e-6, "unmasked within M");
    o.require(id <= 1e-6, "unmasked dz = phi");
    o.require(sm > 0.5, "masked beyond M");
}

double rk4_error(const Matrix& a, const Vector& x0, double dt)
{
    const VectorField f = [&a](double, const Vector& x) { return Vector(a * x); };
    return (integrate_rk4(f, x0, dt, 20.0).states.back() - oracle::expm(a * 20.0) * x0).norm();
}

void numerics_suite(Outcome& o)
{
    const Vector x0 = (Vector(4) << 1.0, 0.5, -0.3, 0.2).finished();
    const double factor = rk4_error(oracle::b747_A(), x0, 0.2) / rk4_error(oracle::b747_A(), x0, 0.1);
    o.require(factor >= 12.0 && factor <= 20.0, "rk4 order factor");

    std::mt19937_64 rng(7);
    double lyap_worst = 0.0, ric_worst = 0.0, sv_worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Eigen::Index n = 1 + i % 8;
        const Matrix a = oracle::random_hurwitz(rng, n, 0.1 + 0.02 * i);
        const Matrix s = solve_lyapunov(a);
        lyap_worst = std::max(lyap_worst, (s * a + a.transpose() * s + Matrix::Identity(n, n)).norm());
    }
    for (int i = 0; i < 100; ++i) {
        const auto inst = oracle::riccati_instance(rng, 1 + i % 7, i % 2 == 0);
        const Matrix p = solve_riccati(inst.A, inst.R, inst.Q,
                                       i % 2 == 0 ? RiccatiBranch::Stabilizing : RiccatiBranch::AntiStabilizing);
        ric_worst = std::max(ric_worst, riccati_residual(inst.A, inst.R, inst.Q, p));
    }
    std::uniform_real_distribution<double> wd(-20.0, 20.0);
    for (int i = 0; i < 100; ++i) {
        const Matrix a = oracle::random_matrix(rng, 1 + i % 7, 1 + i % 7);
        const Matrix c = oracle::random_matrix(rng, 1 + i % 3, 1 + i % 7);
        const double w = wd(rng);
        const double ref = oracle::sigma_min_hermitian(a, c, w);
        sv_worst = std::max(sv_worst, std::abs(min_singular_value_freq(a, c, w) - ref) / std::max(ref, 1e-3));
    }
    o.require(lyap_worst < 1e-8, "lyapunov residual");
    o.require(ric_worst < 1e-6, "riccati residual");
    o.require(sv_worst <= 1e-9, "sigma_min vs hermitian oracle");

    // Schur equivalence on every certified gain at hand.
    const ExtendedSystem& e = *scaled_study().ext;
    std::vector<ObserverGain> gains{certified_gain(), verify_gain(e, certified_gain().L)};
    for (const double eps : synthesis_eps_grid())
        for (const double eta : {1.0, 1e2, 1e4}) {
            const Matrix q = e.E() - 2.0 * eta * e.C.transpose() * e.C + eps * Matrix::Identity(7, 7);
            try {
                ObserverGain g;
                g.P = solve_riccati(e.A, e.ell() * e.ell() * Matrix::Identity(7, 7), q,
                                    RiccatiBranch::AntiStabilizing);
                g.N = eta * e.C.transpose();
                if (verify_lmi(e, g.P, g.N) < 0.0)
                    gains.push_back(g);
            } catch (const ComputationError&) {
            }
        }
    int agree = 0;
    for (const auto& g : gains) {
        const Matrix l = g.P.ldlt().solve(g.N);
        const bool block = verify_lmi(e, g.P, g.N) < 0.0;
        const bool closed = is_negative_definite(closed_loop_lmi(e, g.P, l)).negative_definite;
        agree += block == closed;
    }
    o.require(agree == static_cast<int>(gains.size()), "schur equivalence");
    o.detail << "rk4 factor " << factor << ", lyapunov " << lyap_worst << ", riccati " << ric_worst
             << ", sigma_min rel " << sv_worst << ", schur " << agree << "/" << gains.size();
}

void protocol_invariants(Outcome& o)
{
    const ChaoticMask& m = *scaled_study().mask;
    std::mt19937_64 rng(1000);
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    int ok = 0;
    for (int i = 0; i < 1000; ++i) {
        Vector a(3), b(3);
        for (int k = 0; k < 3; ++k) {
            a(k) = (*m.sigma)(k) * ud(rng);
            b(k) = (*m.sigma)(k) * ud(rng);
        }
        ok += (m.phi.eval(a) - m.phi.eval(b)).norm() <= *m.ell * (a - b).norm();
    }
    o.require(ok == 1000, "lipschitz inequality");

    const Scenario s = build_run(scaled_study(), &certified_gain(), true, RunKind::None);
    const SimTrace t1 = run_scenario(s);
    const SimTrace t2 = run_scenario(s);
    double worst = lyapunov_worst_increase(t1, certified_gain().P);
    for (int trial = 0; trial < 3; ++trial) {
        Scenario r = s;
        r.t_end = 40.0;
        r.t_settle = 20.0;
        for (Eigen::Index k = 0; k < r.xhat0.size(); ++k)
            r.xhat0(k) += ud(rng);
        worst = std::max(worst, lyapunov_worst_increase(run_scenario(r), certified_gain().P));
    }
    o.require(worst <= 0.0, "V nonincreasing");
    const bool same = t1.x == t2.x && t1.xi == t2.xi && t1.xhat == t2.xhat && t1.z == t2.z && t1.chan == t2.chan;
    o.require(same, "bit-identical rerun");
    o.detail << "lipschitz " << ok << "/1000, worst V increase " << worst << ", rerun "
             << (same ? "identical" : "differs");
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"distance reproduction", distance_reproduction},
        {"lipschitz reproduction", lipschitz_reproduction},
        {"synthesis feasibility", synthesis_feasibility},
        {"eavesdropping contrast", eavesdrop_contrast},
        {"replay contrast", replay_contrast},
        {"fdi contrast", fdi_contrast},
        {"numerics property suite", numerics_suite},
        {"protocol invariants", protocol_invariants},
    };

    int failed = 0;
    int index = 1;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            check(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", index++, name, o.detail.str().c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}

// chaomask: command-line front end.
//
// Exit codes: 0 success, 1 computation failure (infeasible synthesis,
// uncertified gain, divergence), 2 input or schema error.

#include <iostream>

#include <CLI11.hpp>

#include "chaomask/commands.hpp"
#include "chaomask/errors.hpp"

namespace {

template <typename T>
void optional_option(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help)
{
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

} // namespace

int main(int argc, char** argv)
{
    using namespace chaomask;

    CLI::App app{"Chaotic masking for secure remote state estimation"};
    app.require_subcommand(1);

    DistanceOptions dist;
    auto* c_dist = app.add_subcommand("distance", "Distance to unobservability of the extended pair");
    c_dist->add_option("scenario", dist.scenario, "Scenario name or path");
    c_dist->add_option("--A", dist.A, "State matrix, rows separated by ';' (matrix mode)");
    c_dist->add_option("--C", dist.C, "Output matrix (matrix mode)");
    c_dist->add_flag("--unscaled", dist.unscaled, "Ignore the configured beta");
    optional_option(c_dist, "--beta", dist.beta, "Override the chaotic-state scaling");
    optional_option(c_dist, "--w-max", dist.w_max, "Upper end of the frequency scan [rad/s]");
    c_dist->add_option("--n-grid", dist.n_grid, "Frequency grid points");
    c_dist->add_option("--profile", dist.profile_out, "Write the (w, sigma_min) profile as CSV");

    SynthesizeOptions syn;
    auto* c_syn = app.add_subcommand("synthesize", "Synthesize and certify the extended-observer gain");
    c_syn->add_option("scenario", syn.scenario, "Scenario name or path")->required();
    c_syn->add_flag("--no-scale,--unscaled", syn.unscaled, "Use the unscaled mask");
    optional_option(c_syn, "--beta", syn.beta, "Override the chaotic-state scaling");
    c_syn->add_option("--out", syn.gain_out, "Write the gain (L, P, N, margin) as JSON");

    VerifyGainOptions ver;
    auto* c_ver = app.add_subcommand("verify-gain", "Certify a given extended-observer gain");
    c_ver->add_option("scenario", ver.scenario, "Scenario name or path")->required();
    c_ver->add_option("--gain", ver.gain_file, "Gain JSON with an L matrix (default: reference_L)");

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Run one closed-loop experiment");
    c_sim->add_option("scenario", sim.scenario, "Scenario name or path")->required();
    c_sim->add_option("--attack", sim.attack, "none, eavesdrop, replay or fdi")
        ->check(CLI::IsMember({"none", "eavesdrop", "replay", "fdi"}));
    c_sim->add_flag("--unmasked", sim.unmasked, "Unprotected baseline");
    optional_option(c_sim, "--M", sim.M, "FDI stealthiness bound");
    optional_option(c_sim, "--nu", sim.nu, "Detector threshold (default: calibrated)");
    c_sim->add_option("--gain", sim.gain_file, "Masked gain JSON (default: synthesize)");
    c_sim->add_option("--out", sim.trace_out, "Trace CSV path");

    CalibrateOptions cal;
    auto* c_cal = app.add_subcommand("calibrate", "Detector threshold from an attack-free run");
    c_cal->add_option("scenario", cal.scenario, "Scenario name or path")->required();
    c_cal->add_flag("--unmasked", cal.unmasked, "Unprotected baseline");
    optional_option(c_cal, "--safety", cal.safety, "Safety factor (> 1)");
    c_cal->add_option("--gain", cal.gain_file, "Masked gain JSON (default: synthesize)");

    ReproduceOptions rep;
    auto* c_rep = app.add_subcommand("reproduce-paper", "Every artifact of the B747 study");
    c_rep->add_option("scenario", rep.scenario, "Scenario name or path");
    c_rep->add_option("--out", rep.out_dir, "Output directory (default: the scenario's output.dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        CommandResult r;
        if (*c_dist)
            r = cmd_distance(dist);
        else if (*c_syn)
            r = cmd_synthesize(syn);
        else if (*c_ver)
            r = cmd_verify_gain(ver);
        else if (*c_sim)
            r = cmd_simulate(sim);
        else if (*c_cal)
            r = cmd_calibrate(cal);
        else
            r = cmd_reproduce_paper(rep);
        std::cout << r.report.dump(2) << '\n';
        return r.exit_code;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ComputationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

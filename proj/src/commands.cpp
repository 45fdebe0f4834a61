#include "chaomask/commands.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chaomask/errors.hpp"

namespace chaomask {

using nlohmann::json;

namespace {

json number_or_null(std::optional<double> v)
{
    return v ? json(*v) : json(nullptr);
}

void write_text(const std::string& path, const std::string& text)
{
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out || !(out << text))
        throw ConfigError("cannot write " + path);
}

void write_profile(const std::string& path, const UnobservabilityReport& r)
{
    std::ostringstream out;
    out << "w,sigma_min\n";
    char buf[64];
    for (const auto& s : r.profile) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.w, s.sigma_min);
        out << buf;
    }
    write_text(path, out.str());
}

json gain_json(const ObserverGain& g)
{
    return {{"L", matrix_to_json(g.L)}, {"P", matrix_to_json(g.P)}, {"N", matrix_to_json(g.N)},
            {"margin", g.margin},       {"ell", g.ell_used},          {"eta", g.eta},
            {"eps", g.eps}};
}

Matrix load_gain_L(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw SchemaError("gain file not found: " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("L"))
        throw SchemaError(path + ": expected an object with an \"L\" matrix");
    return matrix_from_json(j.at("L"), path + ".L");
}

ObserverGain gain_for(const Study& study, const std::string& gain_file)
{
    if (!study.ext)
        throw ConfigError("scenario has no mask configured");
    if (!gain_file.empty())
        return verify_gain(*study.ext, load_gain_L(gain_file));
    return masked_gain(study);
}

std::optional<double> max_abs_eigen_real(const Matrix& m)
{
    if (m.size() == 0)
        return std::nullopt;
    return spectral_abscissa(m);
}

const char* kind_name(RunKind k)
{
    switch (k) {
    case RunKind::None:
        return "none";
    case RunKind::Eavesdrop:
        return "eavesdrop";
    case RunKind::Replay:
        return "replay";
    case RunKind::Fdi:
        return "fdi";
    }
    return "none";
}

} // namespace

// --- matrices ---------------------------------------------------------------

Matrix parse_matrix_arg(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::stringstream rs(text);
    std::string row;
    while (std::getline(rs, row, ';')) {
        std::vector<double> vals;
        std::stringstream cs(row);
        std::string cell;
        while (std::getline(cs, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos)
                    throw std::invalid_argument(cell);
            } catch (const std::logic_error&) {
                throw ConfigError("not a number in matrix argument: '" + cell + "'");
            }
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty() || rows.front().empty())
        throw ConfigError("empty matrix argument");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw ConfigError("ragged matrix argument '" + text + "'");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

json matrix_to_json(const Matrix& m)
{
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        data.push_back(std::move(row));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

// --- experiments ------------------------------------------------------------

Experiment run_experiment(const Study& study, const ObserverGain* gain, bool masked, RunKind kind,
                          std::optional<double> fdi_M, std::optional<double> nu)
{
    Scenario s = build_run(study, gain, masked, kind, fdi_M);
    SimTrace clean = run_scenario(clean_variant(s));
    const double threshold = nu ? *nu : std::max(calibrate_threshold(clean, study.cfg.safety), kNuFloor);
    s.detector_nu = threshold;
    // Re-apply detection with the calibrated threshold to the clean run.
    const Detection d = detect(clean, threshold, s.t_settle);
    clean.alarm = d.alarm;
    clean.first_alarm = d.first_alarm;
    SimTrace trace = run_scenario(s);
    return Experiment{kind, masked, threshold, std::move(s), std::move(trace), std::move(clean)};
}

json summarize(const Study& study, const Experiment& e)
{
    const SimTrace& tr = e.trace;
    json j;
    j["attack"] = kind_name(e.kind);
    j["masked"] = e.masked;
    j["nu"] = e.nu;
    const EstimationMetrics m = estimation_metrics(tr);
    j["terminal_error"] = m.terminal_error;
    j["plant_terminal_error"] = tr.plant_error(tr.size() - 1).norm();
    j["sup_error_after_settle"] = m.sup_error_after_settle;
    j["decay_rate"] = number_or_null(m.rate);
    j["decay_fit_r2"] = m.r_squared;
    j["first_alarm"] = number_or_null(tr.first_alarm);
    j["clean_first_alarm"] = number_or_null(e.clean.first_alarm);

    switch (e.kind) {
    case RunKind::None:
        if (e.scenario.P)
            j["lyapunov_worst_increase"] = lyapunov_worst_increase(tr, *e.scenario.P);
        break;
    case RunKind::Eavesdrop: {
        const auto& spec = std::get<EavesdropAttack>(e.scenario.attack);
        const double t_end = tr.t.back();
        double avg = 0.0, sup = 0.0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            const double err = (tr.x[k] - tr.xa[k]).norm();
            if (tr.t[k] >= t_end - 10.0 - 1e-9) {
                avg += err;
                ++n;
            }
            if (tr.t[k] >= t_end - 20.0 - 1e-9)
                sup = std::max(sup, err);
        }
        const double eps = e.masked ? *study.mask->d_bound : 0.0;
        j["eavesdrop_terminal_error"] = (tr.x.back() - tr.xa.back()).norm();
        j["eavesdrop_mean_error_last10"] = n ? avg / static_cast<double>(n) : 0.0;
        j["eavesdrop_sup_error_last20"] = sup;
        j["eavesdrop_bound"] = eavesdrop_error_bound(study.plant, spec.L_bar, eps);
        j["eavesdrop_bound_eps"] = eps;
        break;
    }
    case RunKind::Replay: {
        const auto& r = std::get<ReplayAttack>(e.scenario.attack);
        const double sup_z = sup_innovation(tr, r.t_start, r.t_start + r.tau);
        j["replay_premise_holds"] = replay_premise_holds(tr, r, e.scenario.tol_ss);
        j["replay_sup_z"] = sup_z;
        j["replay_sup_g"] = sup_z * sup_z;
        j["replay_detected_within_1s"] =
            tr.first_alarm.has_value() && *tr.first_alarm >= r.t_start - 1e-9 && *tr.first_alarm <= r.t_start + 1.0;
        j["t_start"] = r.t_start;
        j["tau"] = r.tau;
        break;
    }
    case RunKind::Fdi: {
        const auto& f = std::get<FdiAttack>(e.scenario.attack);
        const Stealthiness st = stealthiness_metric(tr, e.clean);
        double identity = 0.0;
        for (std::size_t k = 0; k < st.t.size(); ++k)
            identity = std::max(identity, (st.delta_z[k] - f.signal.eval(f.M, st.t[k] - f.t_start)).norm());
        j["fdi_M"] = f.M;
        j["fdi_sup_delta_z"] = st.sup;
        j["fdi_identity_deviation"] = identity;
        j["fdi_stealthy"] = st.sup <= f.M + 1e-6;
        j["open_loop"] = !e.scenario.controller.has_value();
        break;
    }
    }
    return j;
}

// --- subcommands ------------------------------------------------------------

CommandResult cmd_distance(const DistanceOptions& o)
{
    Matrix a, c;
    json rep;
    std::optional<double> ell;
    if (!o.A.empty() || !o.C.empty()) {
        if (o.A.empty() || o.C.empty())
            throw ConfigError("matrix mode needs both --A and --C");
        a = parse_matrix_arg(o.A);
        c = parse_matrix_arg(o.C);
    } else {
        if (o.scenario.empty())
            throw ConfigError("distance needs a scenario or --A/--C");
        const Study st = prepare_study(load_scenario(o.scenario), {o.unscaled, o.beta});
        if (!st.ext)
            throw ConfigError("scenario has no mask configured");
        a = st.ext->A;
        c = st.ext->C;
        ell = st.ext->ell();
        rep["scenario"] = st.cfg.name;
        rep["scaled"] = !o.unscaled && (o.beta || st.cfg.mask->beta);
    }
    const auto r = distance_to_unobservability(a, c, o.w_max, o.n_grid);
    rep["delta"] = r.delta;
    rep["w_star"] = r.w_star;
    rep["w_max"] = o.w_max.value_or(default_w_max(a));
    rep["n_grid"] = o.n_grid;
    if (ell) {
        rep["ell"] = *ell;
        rep["sufficient"] = check_sufficiency(r, *ell);
    }
    if (!o.profile_out.empty()) {
        write_profile(o.profile_out, r);
        rep["profile"] = o.profile_out;
    }
    return {rep, 0};
}

CommandResult cmd_synthesize(const SynthesizeOptions& o)
{
    const Study st = prepare_study(load_scenario(o.scenario), {o.unscaled, o.beta});
    if (!st.ext)
        throw ConfigError("scenario has no mask configured");
    const auto r = distance_to_unobservability(st.ext->A, st.ext->C);
    json rep;
    rep["scenario"] = st.cfg.name;
    rep["delta"] = r.delta;
    rep["w_star"] = r.w_star;
    rep["ell"] = st.ext->ell();
    rep["sigma"] = std::vector<double>(st.mask->sigma->data(), st.mask->sigma->data() + st.mask->sigma->size());
    rep["sufficient"] = check_sufficiency(r, st.ext->ell());
    try {
        const ObserverGain g = synthesize_gain(*st.ext);
        rep["certified"] = true;
        rep["margin"] = g.margin;
        rep["eta"] = g.eta;
        rep["eps"] = g.eps;
        rep["L"] = matrix_to_json(g.L);
        rep["observer_abscissa"] = spectral_abscissa(st.ext->A - g.L * st.ext->C);
        if (!o.gain_out.empty()) {
            write_text(o.gain_out, gain_json(g).dump(2) + "\n");
            rep["gain_file"] = o.gain_out;
        }
        return {rep, 0};
    } catch (const InfeasibleSynthesis& e) {
        rep["certified"] = false;
        rep["best_margin"] = std::isfinite(e.best_margin()) ? json(e.best_margin()) : json(nullptr);
        rep["error"] = e.what();
        return {rep, 1};
    }
}

CommandResult cmd_verify_gain(const VerifyGainOptions& o)
{
    const Study st = prepare_study(load_scenario(o.scenario));
    if (!st.ext)
        throw ConfigError("scenario has no mask configured");
    Matrix l;
    json rep;
    if (!o.gain_file.empty()) {
        l = load_gain_L(o.gain_file);
        rep["source"] = o.gain_file;
    } else {
        if (!st.cfg.reference_L)
            throw ConfigError("scenario has no observer.masked.reference_L and no --gain was given");
        l = *st.cfg.reference_L;
        rep["source"] = "reference_L";
    }
    if (l.rows() != st.ext->n() || l.cols() != st.ext->C.rows())
        throw DimensionError("gain must be " + std::to_string(st.ext->n()) + "x" + std::to_string(st.ext->C.rows()));
    rep["scenario"] = st.cfg.name;
    rep["ell"] = st.ext->ell();
    rep["observer_abscissa"] = number_or_null(max_abs_eigen_real(st.ext->A - l * st.ext->C));
    try {
        const ObserverGain g = verify_gain(*st.ext, l);
        rep["certified"] = true;
        rep["margin"] = g.margin;
        rep["eps"] = g.eps;
        return {rep, 0};
    } catch (const GainNotCertified& e) {
        rep["certified"] = false;
        rep["error"] = e.what();
        return {rep, 1};
    }
}

CommandResult cmd_simulate(const SimulateOptions& o)
{
    const Study st = prepare_study(load_scenario(o.scenario));
    const RunKind kind = parse_run_kind(o.attack);
    std::optional<ObserverGain> gain;
    if (!o.unmasked)
        gain = gain_for(st, o.gain_file);
    const Experiment e = run_experiment(st, gain ? &*gain : nullptr, !o.unmasked, kind, o.M, o.nu);
    json rep = summarize(st, e);
    rep["scenario"] = st.cfg.name;
    if (!o.trace_out.empty()) {
        const std::filesystem::path p(o.trace_out);
        if (p.has_parent_path())
            std::filesystem::create_directories(p.parent_path());
        write_trace_csv(e.trace, o.trace_out);
        rep["trace"] = o.trace_out;
    }
    return {rep, 0};
}

CommandResult cmd_calibrate(const CalibrateOptions& o)
{
    ScenarioConfig cfg = load_scenario(o.scenario);
    if (o.safety)
        cfg.safety = *o.safety;
    const Study st = prepare_study(cfg);
    std::optional<ObserverGain> gain;
    if (!o.unmasked)
        gain = gain_for(st, o.gain_file);
    const Scenario s = build_run(st, gain ? &*gain : nullptr, !o.unmasked, RunKind::None);
    const SimTrace clean = run_scenario(s);
    const double raw = calibrate_threshold(clean, cfg.safety);
    json rep;
    rep["scenario"] = st.cfg.name;
    rep["masked"] = !o.unmasked;
    rep["safety"] = cfg.safety;
    rep["nu_raw"] = raw;
    rep["nu"] = std::max(raw, kNuFloor);
    rep["floored"] = raw < kNuFloor;
    return {rep, 0};
}

CommandResult cmd_reproduce_paper(const ReproduceOptions& o)
{
    const ScenarioConfig cfg = load_scenario(o.scenario);
    const std::string dir = o.out_dir.empty() ? cfg.output_dir : o.out_dir;
    std::filesystem::create_directories(dir);
    const auto path = [&](const std::string& f) { return (std::filesystem::path(dir) / f).string(); };

    json rep;
    rep["scenario"] = cfg.name;
    rep["out_dir"] = dir;

    // Distance to unobservability and Lipschitz constant, unscaled vs scaled.
    const Study unscaled = prepare_study(cfg, {true, std::nullopt});
    const Study scaled = prepare_study(cfg);
    for (const auto* st : {&unscaled, &scaled}) {
        const bool is_scaled = st == &scaled;
        const auto r = distance_to_unobservability(st->ext->A, st->ext->C);
        const std::string tag = is_scaled ? "scaled" : "unscaled";
        write_profile(path("distance_" + tag + ".csv"), r);
        rep["distance"][tag] = {{"delta", r.delta},
                                {"w_star", r.w_star},
                                {"ell", st->ext->ell()},
                                {"sufficient", check_sufficiency(r, st->ext->ell())}};
    }

    try {
        synthesize_gain(*unscaled.ext);
        rep["synthesis"]["unscaled_certified"] = true;
    } catch (const InfeasibleSynthesis&) {
        rep["synthesis"]["unscaled_certified"] = false;
    }
    const ObserverGain gain = masked_gain(scaled);
    write_text(path("gain.json"), gain_json(gain).dump(2) + "\n");
    rep["synthesis"]["margin"] = gain.margin;
    rep["synthesis"]["eta"] = gain.eta;
    rep["synthesis"]["eps"] = gain.eps;

    if (cfg.reference_L) {
        try {
            const ObserverGain g = verify_gain(*scaled.ext, *cfg.reference_L);
            rep["reference_gain"] = {{"certified", true}, {"margin", g.margin}};
        } catch (const GainNotCertified&) {
            rep["reference_gain"] = {{"certified", false}};
        }
        rep["reference_gain"]["observer_abscissa"] =
            spectral_abscissa(scaled.ext->A - *cfg.reference_L * scaled.ext->C);
    }

    // Four experiments, each masked and unmasked; independent, so run
    // concurrently and joined in a fixed order.
    const RunKind kinds[] = {RunKind::None, RunKind::Eavesdrop, RunKind::Replay, RunKind::Fdi};
    std::vector<std::optional<Experiment>> runs(8);
    std::vector<std::exception_ptr> errors(8);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < 8; ++i) {
        try {
            const bool masked = i % 2 == 0;
            runs[static_cast<std::size_t>(i)] =
                run_experiment(scaled, masked ? &gain : nullptr, masked, kinds[i / 2]);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    json experiments = json::array();
    for (const auto& r : runs) {
        const std::string file =
            std::string("trace_") + kind_name(r->kind) + (r->masked ? "_masked" : "_unmasked") + ".csv";
        write_trace_csv(r->trace, path(file));
        json s = summarize(scaled, *r);
        s["trace"] = file;
        experiments.push_back(std::move(s));
    }
    rep["experiments"] = experiments;

    // Masked (even index) vs unmasked (odd index) contrasts.
    const auto& ex = experiments;
    json table = json::array();
    table.push_back({{"contrast", "estimation error at t_end"},
                     {"masked", ex[0]["terminal_error"]},
                     {"unmasked", ex[1]["terminal_error"]}});
    table.push_back({{"contrast", "eavesdropper mean error, last 10 s"},
                     {"masked", ex[2]["eavesdrop_mean_error_last10"]},
                     {"unmasked", ex[3]["eavesdrop_mean_error_last10"]}});
    table.push_back({{"contrast", "replay: sup |z| in window / detected within 1 s"},
                     {"masked", {ex[4]["replay_sup_z"], ex[4]["replay_detected_within_1s"]}},
                     {"unmasked", {ex[5]["replay_sup_z"], ex[5]["replay_detected_within_1s"]}}});
    table.push_back({{"contrast", "FDI: sup |delta z| (M = 0.5)"},
                     {"masked", ex[6]["fdi_sup_delta_z"]},
                     {"unmasked", ex[7]["fdi_sup_delta_z"]}});
    rep["summary"] = table;

    std::ostringstream txt;
    char line[256];
    std::snprintf(line, sizeof line, "%-48s %-24s %-24s\n", "contrast", "masked", "unmasked");
    txt << line;
    for (const auto& row : table) {
        std::snprintf(line, sizeof line, "%-48s %-24s %-24s\n", row["contrast"].get<std::string>().c_str(),
                      row["masked"].dump().c_str(), row["unmasked"].dump().c_str());
        txt << line;
    }
    write_text(path("summary.txt"), txt.str());
    write_text(path("summary.json"), rep.dump(2) + "\n");
    return {rep, 0};
}

} // namespace chaomask

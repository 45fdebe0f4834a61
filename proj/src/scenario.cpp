#include "chaomask/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "chaomask/commands.hpp"
#include "chaomask/errors.hpp"

#ifndef CHAOMASK_SCENARIO_DIR
#define CHAOMASK_SCENARIO_DIR "scenarios"
#endif

namespace chaomask {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const std::string& what)
{
    if (!j.is_object())
        throw SchemaError(what + ": expected {\"rows\", \"cols\", \"data\"}");
    for (const auto& item : j.items())
        if (item.key() != "rows" && item.key() != "cols" && item.key() != "data")
            throw SchemaError(what + "." + item.key() + ": unknown key");
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw SchemaError(what + ": rows, cols and data are required");
    const json& rows_j = j.at("rows");
    const json& cols_j = j.at("cols");
    if (!rows_j.is_number_integer() || !cols_j.is_number_integer() || rows_j.get<long>() < 0 ||
        cols_j.get<long>() < 0)
        throw SchemaError(what + ": rows and cols must be nonnegative integers");
    const auto rows = rows_j.get<Eigen::Index>();
    const auto cols = cols_j.get<Eigen::Index>();
    const json& data = j.at("data");
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows)
        throw SchemaError(what + ".data: expected " + std::to_string(rows) + " rows");
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = data[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw SchemaError(what + ".data[" + std::to_string(i) + "]: expected " + std::to_string(cols) +
                              " entries");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const json& v = row[static_cast<std::size_t>(k)];
            if (!v.is_number())
                throw SchemaError(what + ".data: non-numeric entry");
            out(i, k) = v.get<double>();
        }
    }
    return out;
}

namespace {

// Object view that remembers which keys were read, so leftovers can be
// reported as unknown.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw SchemaError(path_ + ": expected an object");
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& at(const std::string& key)
    {
        const json* v = find(key);
        if (v == nullptr)
            throw SchemaError(where(key) + ": required key missing");
        return *v;
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    Node child(const std::string& key) { return Node(at(key), where(key)); }

    std::optional<Node> opt_child(const std::string& key)
    {
        const json* v = find(key);
        if (v == nullptr)
            return std::nullopt;
        return Node(*v, where(key));
    }

    double number(const std::string& key)
    {
        const json& v = at(key);
        if (!v.is_number())
            throw SchemaError(where(key) + ": expected a number");
        return v.get<double>();
    }

    std::optional<double> opt_number(const std::string& key)
    {
        if (!has(key)) {
            seen_.insert(key);
            return std::nullopt;
        }
        return number(key);
    }

    std::string string(const std::string& key)
    {
        const json& v = at(key);
        if (!v.is_string())
            throw SchemaError(where(key) + ": expected a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const json* v = find(key);
        if (v == nullptr)
            return fallback;
        if (!v->is_boolean())
            throw SchemaError(where(key) + ": expected true or false");
        return v->get<bool>();
    }

    Matrix matrix(const std::string& key);
    std::optional<Matrix> opt_matrix(const std::string& key)
    {
        if (!has(key)) {
            seen_.insert(key);
            return std::nullopt;
        }
        return matrix(key);
    }

    Vector vector(const std::string& key);
    std::optional<Vector> opt_vector(const std::string& key)
    {
        if (!has(key)) {
            seen_.insert(key);
            return std::nullopt;
        }
        return vector(key);
    }

    std::string where(const std::string& key) const { return path_ + "." + key; }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw SchemaError(where(item.key()) + ": unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Matrix Node::matrix(const std::string& key)
{
    return matrix_from_json(at(key), where(key));
}

Vector Node::vector(const std::string& key)
{
    const json& v = at(key);
    if (!v.is_array())
        throw SchemaError(where(key) + ": expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw SchemaError(where(key) + ": non-numeric entry");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

MaskConfig parse_mask(Node n)
{
    MaskConfig m;
    m.type = n.string("type");
    if (m.type == "rossler_p4") {
        m.a = n.number("a");
        m.b = n.number("b");
    } else if (m.type == "custom") {
        m.Phi = n.matrix("Phi");
        const json& terms = n.at("phi");
        if (!terms.is_array())
            throw SchemaError(n.where("phi") + ": expected an array of terms");
        for (std::size_t i = 0; i < terms.size(); ++i) {
            Node t(terms[i], n.where("phi") + "[" + std::to_string(i) + "]");
            const double out = t.number("output");
            Monomial mono;
            mono.coeff = t.number("coeff");
            const Vector e = t.vector("exponents");
            for (Eigen::Index k = 0; k < e.size(); ++k)
                mono.exponents.push_back(static_cast<int>(e(k)));
            t.finish();
            m.phi.emplace_back(static_cast<int>(out), std::move(mono));
        }
    } else {
        throw SchemaError(n.where("type") + ": expected \"rossler_p4\" or \"custom\"");
    }
    m.beta = n.opt_number("beta");
    if (m.beta && !(*m.beta > 0.0))
        throw SchemaError(n.where("beta") + ": must be positive");
    m.Lambda = n.matrix("Lambda");
    if (auto e = n.opt_child("estimation")) {
        if (auto v = e->opt_number("t_settle"))
            m.box.t_settle = *v;
        if (auto v = e->opt_number("t_obs"))
            m.box.t_obs = *v;
        if (auto v = e->opt_number("margin"))
            m.box.margin = *v;
        if (auto v = e->opt_number("grid_per_axis"))
            m.box.grid_per_axis = static_cast<int>(*v);
        if (auto v = e->opt_number("dt"))
            m.box.dt = *v;
        e->finish();
    }
    if (auto o = n.opt_child("overrides")) {
        m.sigma = o->opt_vector("sigma");
        m.ell = o->opt_number("ell");
        m.d_bound = o->opt_number("d_bound");
        o->finish();
    }
    n.finish();
    return m;
}

ScenarioConfig parse_document(const json& doc, const std::string& origin)
{
    Node root(doc, origin);
    ScenarioConfig c;
    if (root.has("name"))
        c.name = root.string("name");
    else
        root.find("name");

    {
        Node p = root.child("plant");
        c.A = p.matrix("A");
        c.B = p.matrix("B");
        c.C = p.matrix("C");
        p.finish();
    }
    if (auto m = root.opt_child("mask"))
        c.mask = parse_mask(*m);
    if (auto k = root.opt_child("controller")) {
        c.K = k->matrix("K");
        c.u_ref = k->opt_vector("u_ref").value_or(Vector());
        k->finish();
    }
    {
        Node o = root.child("observer");
        if (auto m = o.opt_child("masked")) {
            const std::string source = m->string("gain");
            if (source == "synthesize") {
                c.synthesize = true;
            } else if (source == "explicit") {
                c.synthesize = false;
                c.masked_L = m->matrix("L");
            } else {
                throw SchemaError(m->where("gain") + ": expected \"synthesize\" or \"explicit\"");
            }
            c.reference_L = m->opt_matrix("reference_L");
            m->finish();
        }
        c.unmasked_L = o.matrix("unmasked_L");
        o.finish();
    }
    if (auto d = root.opt_child("detector")) {
        c.nu = d->opt_number("nu");
        if (auto cal = d->opt_child("calibrate")) {
            c.safety = cal->number("safety");
            cal->finish();
        }
        d->finish();
    }
    if (auto a = root.opt_child("attacks")) {
        if (auto e = a->opt_child("eavesdrop")) {
            c.eavesdrop_L_bar = e->matrix("L_bar");
            e->finish();
        }
        if (auto r = a->opt_child("replay")) {
            c.replay.tau = r->number("tau");
            c.replay.t_start = r->number("t_start");
            c.replay_u_ref = r->opt_vector("u_ref").value_or(Vector());
            r->finish();
        }
        if (auto f = a->opt_child("fdi")) {
            c.fdi.M = f->number("M");
            c.fdi.t_start = f->number("t_start");
            const std::string sig = f->has("signal") ? f->string("signal") : (f->find("signal"), "constant");
            if (sig == "constant")
                c.fdi.signal.shape = PhiSignal::Shape::Constant;
            else if (sig == "sine")
                c.fdi.signal.shape = PhiSignal::Shape::Sine;
            else
                throw SchemaError(f->where("signal") + ": expected \"constant\" or \"sine\"");
            c.fdi.signal.direction = f->opt_vector("direction").value_or(Vector());
            c.fdi.signal.omega = f->opt_number("omega").value_or(1.0);
            c.fdi_open_loop = f->boolean("open_loop", true);
            f->finish();
        }
        a->finish();
    }
    if (auto i = root.opt_child("integration")) {
        c.dt = i->opt_number("dt").value_or(c.dt);
        c.t_end = i->opt_number("t_end").value_or(c.t_end);
        c.t_settle = i->opt_number("t_settle").value_or(c.t_settle);
        i->finish();
    }
    {
        Node i = root.child("initial");
        c.x0 = i.vector("x0");
        c.xhat0 = i.opt_vector("xhat0").value_or(Vector::Zero(c.x0.size()));
        c.xi0 = i.opt_vector("xi0").value_or(Vector());
        c.xihat0 = i.opt_vector("xihat0").value_or(Vector());
        c.xa0 = i.opt_vector("xa0").value_or(Vector());
        i.finish();
    }
    if (auto o = root.opt_child("output")) {
        c.output_dir = o->string("dir");
        o->finish();
    }
    root.finish();

    // Cross-field checks that need no computation.
    const Eigen::Index ny = c.C.rows();
    if (c.fdi.signal.direction.size() == 0)
        c.fdi.signal.direction = Vector::Unit(ny, 0);
    if (c.mask) {
        if (c.xi0.size() == 0)
            throw SchemaError(origin + ".initial.xi0: required when a mask is configured");
        if (c.xihat0.size() == 0)
            c.xihat0 = Vector::Zero(c.xi0.size());
    }
    return c;
}

} // namespace

std::string resolve_scenario_path(const std::string& name_or_path)
{
    const std::filesystem::path p(name_or_path);
    if (name_or_path.find('/') == std::string::npos && !p.has_extension())
        return (std::filesystem::path(CHAOMASK_SCENARIO_DIR) / (name_or_path + ".json")).string();
    return name_or_path;
}

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin)
{
    json doc;
    try {
        doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    return parse_document(doc, origin);
}

ScenarioConfig load_scenario(const std::string& name_or_path)
{
    const std::string path = resolve_scenario_path(name_or_path);
    std::ifstream in(path);
    if (!in)
        throw SchemaError("scenario file not found: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    ScenarioConfig c = parse_scenario_text(buf.str(), std::filesystem::path(path).stem().string());
    if (c.name.empty())
        c.name = std::filesystem::path(path).stem().string();
    return c;
}

Study prepare_study(const ScenarioConfig& cfg, const MaskChoice& choice)
{
    Study s{cfg, LtiPlant(cfg.A, cfg.B, cfg.C), std::nullopt, std::nullopt, Vector(), Vector()};
    if (!cfg.mask)
        return s;

    const MaskConfig& mc = *cfg.mask;
    ChaoticMask m;
    if (mc.type == "rossler_p4") {
        m = rossler_p4(mc.a, mc.b);
    } else {
        require_square(mc.Phi, "mask Phi");
        m.Phi = mc.Phi;
        m.phi = PolynomialMap(static_cast<int>(mc.Phi.rows()), static_cast<int>(mc.Phi.rows()));
        for (const auto& [out, mono] : mc.phi)
            m.phi.add_term(out, mono.coeff, mono.exponents);
    }
    if (cfg.xi0.size() != m.n_xi())
        throw DimensionError("initial.xi0 must have " + std::to_string(m.n_xi()) + " entries");
    if (cfg.xihat0.size() != m.n_xi())
        throw DimensionError("initial.xihat0 must have " + std::to_string(m.n_xi()) + " entries");

    // 0 means unscaled.
    const double beta = choice.unscaled ? 0.0 : choice.beta.value_or(mc.beta.value_or(0.0));
    s.xi0 = cfg.xi0;
    s.xihat0 = cfg.xihat0;
    if (beta != 0.0) {
        m = scale_mask(m, beta);
        const double scale = 1.0 / beta;
        s.xi0(s.xi0.size() - 1) *= scale;
        s.xihat0(s.xihat0.size() - 1) *= scale;
    }
    m.Lambda = mc.Lambda;

    const bool as_configured = !choice.unscaled && !choice.beta;
    if (as_configured && mc.sigma && mc.ell && mc.d_bound) {
        m.sigma = mc.sigma;
        m.ell = mc.ell;
        m.d_bound = mc.d_bound;
    } else {
        m = populate_mask(m, s.xi0, mc.box);
        if (as_configured) {
            if (mc.sigma)
                m.sigma = mc.sigma;
            if (mc.ell)
                m.ell = mc.ell;
            if (mc.d_bound)
                m.d_bound = mc.d_bound;
        }
    }
    if (m.sigma->size() != m.n_xi())
        throw DimensionError("mask sigma override must have " + std::to_string(m.n_xi()) + " entries");
    s.ext = build_extended(s.plant, m);
    s.mask = std::move(m);
    return s;
}

RunKind parse_run_kind(const std::string& s)
{
    if (s == "none")
        return RunKind::None;
    if (s == "eavesdrop")
        return RunKind::Eavesdrop;
    if (s == "replay")
        return RunKind::Replay;
    if (s == "fdi")
        return RunKind::Fdi;
    throw ConfigError("unknown attack '" + s + "' (none, eavesdrop, replay, fdi)");
}

Scenario build_run(const Study& study, const ObserverGain* gain, bool masked, RunKind kind,
                   std::optional<double> fdi_M)
{
    const ScenarioConfig& c = study.cfg;
    Scenario s(study.plant);
    if (c.K)
        s.controller = Controller{*c.K, c.u_ref};
    s.dt = c.dt;
    s.t_end = c.t_end;
    s.t_settle = c.t_settle;
    s.x0 = c.x0;
    s.xa0 = c.xa0;

    if (masked) {
        if (!study.mask)
            throw ConfigError("scenario has no mask configured");
        if (gain == nullptr)
            throw ConfigError("masked run needs an observer gain");
        s.mask = study.mask;
        s.L = gain->L;
        s.P = gain->P;
        s.xi0 = study.xi0;
        s.xhat0.resize(study.mask->n_xi() + c.x0.size());
        s.xhat0 << study.xihat0, c.xhat0;
    } else {
        s.L = c.unmasked_L;
        s.xhat0 = c.xhat0;
    }

    switch (kind) {
    case RunKind::None:
        break;
    case RunKind::Eavesdrop:
        if (!c.eavesdrop_L_bar)
            throw ConfigError("scenario has no attacks.eavesdrop block");
        s.attack = EavesdropAttack{*c.eavesdrop_L_bar};
        break;
    case RunKind::Replay:
        s.attack = c.replay;
        if (s.controller && c.replay_u_ref.size())
            s.controller->u_ref = c.replay_u_ref;
        break;
    case RunKind::Fdi: {
        FdiAttack f = c.fdi;
        if (fdi_M)
            f.M = *fdi_M;
        s.attack = f;
        if (c.fdi_open_loop)
            s.controller.reset();
        break;
    }
    }
    return s;
}

double calibrated_nu(const Scenario& s, double safety)
{
    const SimTrace clean = run_scenario(clean_variant(s));
    return std::max(calibrate_threshold(clean, safety), kNuFloor);
}

ObserverGain masked_gain(const Study& study)
{
    if (!study.ext)
        throw ConfigError("scenario has no mask configured");
    if (study.cfg.synthesize)
        return synthesize_gain(*study.ext);
    return verify_gain(*study.ext, *study.cfg.masked_L);
}

} // namespace chaomask

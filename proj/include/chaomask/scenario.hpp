#pragma once

// Scenario files: JSON (comments allowed) with every matrix written as
// {"rows": r, "cols": c, "data": [[...], ...]}. Unknown keys are rejected.

#include <optional>
#include <string>
#include <vector>

#include "chaomask/attacks.hpp"
#include "chaomask/sim.hpp"
#include "chaomask/synthesis.hpp"

namespace chaomask {

struct MaskConfig {
    std::string type = "rossler_p4"; ///< "rossler_p4" or "custom"
    double a = 0.5;
    double b = 0.5;
    std::optional<double> beta;      ///< scaling of the last chaotic state; absent = unscaled
    Matrix Phi;                      ///< custom only
    std::vector<std::pair<int, Monomial>> phi; ///< custom only: (output, term)
    Matrix Lambda;
    BoxOptions box;
    std::optional<Vector> sigma;     ///< overrides, in the (scaled) mask coordinates
    std::optional<double> ell;
    std::optional<double> d_bound;
};

struct ScenarioConfig {
    std::string name;
    Matrix A, B, C;
    std::optional<MaskConfig> mask;
    std::optional<Matrix> K;
    Vector u_ref;

    bool synthesize = true;          ///< masked gain source
    std::optional<Matrix> masked_L;  ///< explicit masked gain
    std::optional<Matrix> reference_L; ///< a published gain to certify
    Matrix unmasked_L;

    std::optional<double> nu;
    double safety = 4.0;

    std::optional<Matrix> eavesdrop_L_bar;
    ReplayAttack replay;
    Vector replay_u_ref;
    FdiAttack fdi;
    bool fdi_open_loop = true;

    double dt = kDefaultDt;
    double t_end = 60.0;
    double t_settle = 30.0;

    Vector x0, xi0, xhat0, xihat0, xa0;
    std::string output_dir = "out";
};

/// A bare name (no '/' and no extension) resolves to the bundled scenarios
/// directory; anything else is a path.
std::string resolve_scenario_path(const std::string& name_or_path);

/// Throws SchemaError for malformed documents, unknown keys or a missing file.
ScenarioConfig load_scenario(const std::string& name_or_path);
ScenarioConfig parse_scenario_text(const std::string& text, const std::string& origin = "<string>");

/// Plant, populated mask and extended system for one mask setting.
struct Study {
    ScenarioConfig cfg;
    LtiPlant plant;
    std::optional<ChaoticMask> mask;
    std::optional<ExtendedSystem> ext;
    Vector xi0;    ///< initial chaotic state in the mask's (possibly scaled) coordinates
    Vector xihat0; ///< same coordinates
};

struct MaskChoice {
    bool unscaled = false;          ///< ignore the configured beta
    std::optional<double> beta;     ///< override the configured beta
};

Study prepare_study(const ScenarioConfig& cfg, const MaskChoice& choice = {});

enum class RunKind { None, Eavesdrop, Replay, Fdi };

RunKind parse_run_kind(const std::string& s);

/// Scenario for one experiment. Replay uses the constant-reference
/// controller; FDI runs open loop when so configured. The detector threshold
/// is left at 0; see `calibrated`.
Scenario build_run(const Study& study, const ObserverGain* masked_gain, bool masked, RunKind kind,
                   std::optional<double> fdi_M = std::nullopt);

/// Threshold from the attack-free variant of `s`: max(safety * max g, floor).
double calibrated_nu(const Scenario& s, double safety);

/// Gain for the masked estimator: synthesized or the explicit one from the
/// file (certified through verify_gain).
ObserverGain masked_gain(const Study& study);

} // namespace chaomask

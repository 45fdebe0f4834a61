#include <doctest.h>

#include <fstream>
#include <sstream>

#include "chaomask/commands.hpp"
#include "chaomask/errors.hpp"
#include "chaomask/scenario.hpp"

using namespace chaomask;

namespace {

std::string bundled_text()
{
    std::ifstream in(resolve_scenario_path("paper_b747"));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Text of the bundled file with the first occurrence of `from` replaced.
std::string edited(const std::string& from, const std::string& to)
{
    std::string t = bundled_text();
    const auto pos = t.find(from);
    REQUIRE(pos != std::string::npos);
    return t.replace(pos, from.size(), to);
}

} // namespace

TEST_CASE("bundled scenario carries the aircraft study")
{
    const ScenarioConfig c = load_scenario("paper_b747");
    CHECK(c.name == "paper_b747");
    CHECK(c.A.rows() == 4);
    CHECK(c.A(3, 1) == -9.7942);
    CHECK(c.B(3, 1) == 1.3287);
    REQUIRE(c.mask.has_value());
    CHECK(*c.mask->beta == 100.0);
    CHECK(c.mask->Lambda(1, 1) == 2.0);
    REQUIRE(c.K.has_value());
    CHECK(c.K->rows() == 3);
    CHECK(c.unmasked_L.rows() == 4);
    CHECK(c.unmasked_L(3, 1) == 25.9750);
    REQUIRE(c.reference_L.has_value());
    CHECK(c.reference_L->rows() == 7);
    CHECK(c.fdi.M == 0.5);
    CHECK(c.fdi.t_start == 30.0);
    CHECK(c.replay.t_start == 40.0);
    CHECK(c.safety == 4.0);
    CHECK(c.dt == 1e-3);
}

TEST_CASE("scenario paths")
{
    CHECK(resolve_scenario_path("paper_b747").find("scenarios/paper_b747.json") != std::string::npos);
    CHECK(resolve_scenario_path("./mine.json") == "./mine.json");
    CHECK_THROWS_AS(load_scenario("/nonexistent/dir/x.json"), SchemaError);
    CHECK_THROWS_AS(load_scenario("no_such_bundled_scenario"), SchemaError);
}

TEST_CASE("schema violations are rejected")
{
    CHECK_THROWS_AS(parse_scenario_text("{"), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text("[]"), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"name\"", "\"nmae\"")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"margin\"", "\"margn\"")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"rows\": 4, \"cols\": 4", "\"rows\": 4, \"cols\": 3")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"beta\": 100", "\"beta\": -1")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"beta\": 100", "\"beta\": \"big\"")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"gain\": \"synthesize\"", "\"gain\": \"guess\"")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"type\": \"rossler_p4\"", "\"type\": \"lorenz\"")), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(edited("\"plant\"", "\"plnt\"")), SchemaError);
}

TEST_CASE("unobservable plants are input errors")
{
    const std::string t = edited("[1.0, 0.0, 0.0, 1.0],\n      [0.0, 0.0, 1.0, 1.0]]",
                                 "[0.0, 0.0, 0.0, 0.0],\n      [0.0, 0.0, 0.0, 0.0]]");
    CHECK_THROWS_AS(prepare_study(parse_scenario_text(t)), InputError);
}

TEST_CASE("study scales the initial chaotic state with the mask")
{
    ScenarioConfig c = load_scenario("paper_b747");
    c.xi0 = (Vector(3) << 0.1, 0.3, 0.05).finished();
    const Study s = prepare_study(c);
    CHECK(s.xi0(2) == doctest::Approx(0.0005));
    CHECK(s.mask->Phi(0, 2) == -100.0);

    const Study u = prepare_study(c, MaskChoice{true, std::nullopt});
    CHECK(u.xi0(2) == 0.05);
    CHECK(u.mask->Phi(0, 2) == -1.0);
    CHECK(*u.mask->ell > *s.mask->ell);
}

TEST_CASE("explicit mask overrides")
{
    const std::string t = edited("\"estimation\"", "\"overrides\": {\"sigma\": [10, 10, 0.2], \"ell\": 0.02, "
                                                   "\"d_bound\": 30},\n    \"estimation\"");
    const Study s = prepare_study(parse_scenario_text(t));
    CHECK(*s.mask->ell == 0.02);
    CHECK(*s.mask->d_bound == 30.0);
    CHECK((*s.mask->sigma)(2) == 0.2);
}

TEST_CASE("matrix arguments and json round trip")
{
    const Matrix m = parse_matrix_arg("1,2;3,4");
    CHECK(m == (Matrix(2, 2) << 1, 2, 3, 4).finished());
    CHECK(parse_matrix_arg("0") == Matrix::Zero(1, 1));
    CHECK_THROWS_AS(parse_matrix_arg("1,2;3"), ConfigError);
    CHECK_THROWS_AS(parse_matrix_arg("1,x"), ConfigError);
    CHECK_THROWS_AS(parse_matrix_arg(""), ConfigError);

    const Matrix r = (Matrix(2, 3) << 0.1, -2e-17, 3.0, 4.5, 1.0 / 3.0, -7.0).finished();
    CHECK(matrix_from_json(matrix_to_json(r), "r") == r);
    CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse(R"({"rows": 1, "cols": 1})"), "m"), SchemaError);
    CHECK_THROWS_AS(matrix_from_json(nlohmann::json::parse(R"({"rows": 1, "cols": 1, "data": [[1]], "x": 0})"), "m"),
                    SchemaError);
}

TEST_CASE("run kinds")
{
    CHECK(parse_run_kind("fdi") == RunKind::Fdi);
    CHECK(parse_run_kind("none") == RunKind::None);
    CHECK_THROWS_AS(parse_run_kind("dos"), ConfigError);
}

TEST_CASE("runs built from the study")
{
    const Study s = prepare_study(load_scenario("paper_b747"));
    ObserverGain g;
    g.L = Matrix::Zero(7, 2);
    g.P = Matrix::Identity(7, 7);

    const Scenario replay = build_run(s, &g, true, RunKind::Replay);
    CHECK(replay.masked());
    CHECK(replay.xhat0.size() == 7);
    CHECK(replay.controller->u_ref == s.cfg.replay_u_ref);
    CHECK(std::holds_alternative<ReplayAttack>(replay.attack));

    const Scenario fdi = build_run(s, nullptr, false, RunKind::Fdi, 0.25);
    CHECK_FALSE(fdi.masked());
    CHECK_FALSE(fdi.controller.has_value());
    CHECK(std::get<FdiAttack>(fdi.attack).M == 0.25);

    CHECK_THROWS_AS(build_run(s, nullptr, true, RunKind::None), ConfigError);
}

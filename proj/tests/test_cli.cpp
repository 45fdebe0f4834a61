#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

namespace {

struct Run {
    int code;
    std::string out;
};

Run cli(const std::string& args)
{
    const std::string out = "test_cli_stdout.txt";
    const std::string cmd = std::string(CHAOMASK_CLI_PATH) + " " + args + " > " + out + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    std::remove(out.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string write_file(const std::string& name, const std::string& text)
{
    std::ofstream(name) << text;
    return name;
}

} // namespace

TEST_CASE("input errors exit with 2")
{
    CHECK(cli("simulate /nonexistent/scenario.json").code == 2);
    CHECK(cli("frobnicate").code == 2);
    CHECK(cli("").code == 2);
    CHECK(cli("distance --A 1,2 --C 1").code == 2);
    CHECK(cli("simulate paper_b747 --attack dos").code == 2);
    const std::string bad = write_file("test_cli_bad.json", "{\"name\": \"x\", \"bogus\": 1}");
    CHECK(cli("synthesize " + bad).code == 2);
    std::remove(bad.c_str());
}

TEST_CASE("help exits with 0")
{
    CHECK(cli("--help").code == 0);
}

TEST_CASE("distance in matrix mode")
{
    const Run r = cli("distance --A 0 --C 1");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("delta").get<double>() == doctest::Approx(1.0));
}

TEST_CASE("an uncertified gain exits with 1")
{
    const std::string gain = write_file(
        "test_cli_gain.json",
        R"({"L": {"rows": 7, "cols": 2, "data": [[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0]]}})");
    const Run r = cli("verify-gain paper_b747 --gain " + gain);
    CHECK(r.code == 1);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("certified").get<bool>() == false);
    std::remove(gain.c_str());
}

TEST_CASE("synthesize reports the certified gain and the sufficiency verdict")
{
    const Run r = cli("synthesize paper_b747 --out test_cli_synth.json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("margin").get<double>() < 0.0);
    CHECK(j.at("sufficient").get<bool>());
    CHECK(std::filesystem::exists("test_cli_synth.json"));

    // The written gain certifies through verify-gain.
    const Run v = cli("verify-gain paper_b747 --gain test_cli_synth.json");
    CHECK(v.code == 0);
    std::remove("test_cli_synth.json");

    const Run u = cli("synthesize paper_b747 --no-scale");
    const auto ju = nlohmann::json::parse(u.out);
    CHECK_FALSE(ju.at("sufficient").get<bool>());
}

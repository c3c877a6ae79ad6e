// Drives the installed binary end to end: exit codes, the one-JSON-document
// stdout contract, and byte-identical reruns.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run(const std::string& args) {
    std::string command = std::string(CIRREGIME_BIN) + " " + args + " 2>/dev/null";
    std::array<char, 4096> buffer{};
    RunResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::size_t got;
    while ((got = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
        result.out.append(buffer.data(), got);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string data(const std::string& name) {
    return std::string(TEST_DATA_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

TEST_CASE("validate: exit codes track usability", "[cli]") {
    auto ok = run("validate " + data("light.json"));
    CHECK(ok.exit_code == 0);
    auto payload = nlohmann::json::parse(ok.out);
    CHECK(payload.at("usable").get<bool>());
    CHECK(payload.at("manifest").at("command") == "validate");

    auto h1 = run("validate " + data("h1_violating.json"));
    CHECK(h1.exit_code == 1);
    auto h1_payload = nlohmann::json::parse(h1.out);
    CHECK(h1_payload.at("first_failing") == "H1");

    auto bad = run("validate " + data("malformed.json"));
    CHECK(bad.exit_code == 2);

    auto missing = run("validate /nonexistent/model.json");
    CHECK(missing.exit_code == 1);
}

TEST_CASE("classify: verdicts as JSON", "[cli]") {
    auto heavy = run("classify " + data("heavy.json"));
    REQUIRE(heavy.exit_code == 0);
    auto payload = nlohmann::json::parse(heavy.out);
    CHECK(payload.at("recurrence") == "PositiveRecurrent");
    CHECK(payload.at("tail").at("kind") == "HeavyTailed");
    CHECK(std::abs(payload.at("tail").at("kappa").get<double>() - 1.5) < 1e-5);
    CHECK(payload.at("theorem") == "3.2(ii)");

    auto light = run("classify " + data("light.json"));
    REQUIRE(light.exit_code == 0);
    auto light_payload = nlohmann::json::parse(light.out);
    CHECK(light_payload.at("tail").at("kind") == "LightTailed");
    CHECK(light_payload.at("tail").at("delta_max").get<double>() == 0.5);
    CHECK(light_payload.at("theorem") == "3.2(i)");

    auto transient = run("classify " + data("transient.json"));
    REQUIRE(transient.exit_code == 0);
    auto transient_payload = nlohmann::json::parse(transient.out);
    CHECK(transient_payload.at("recurrence") == "Transient");
    CHECK_FALSE(transient_payload.contains("tail"));

    auto state_dep = run("classify " + data("state_dep.json"));
    REQUIRE(state_dep.exit_code == 0);
    auto sd_payload = nlohmann::json::parse(state_dep.out);
    CHECK(sd_payload.at("recurrence") == "PositiveRecurrent");
    CHECK(sd_payload.at("witness_p").get<double>() > 0);
}

TEST_CASE("spectral: curve file and summary", "[cli]") {
    auto result = run("spectral " + data("heavy.json") +
                      " --p-min 0 --p-max 3 --p-steps 31 --out /tmp/cli_spectral.csv");
    REQUIRE(result.exit_code == 0);
    auto payload = nlohmann::json::parse(result.out);
    CHECK(std::abs(payload.at("kappa").get<double>() - 1.5) < 1e-5);
    CHECK(payload.at("kappa_bound").get<double>() == 2.0);

    std::string csv = slurp("/tmp/cli_spectral.csv");
    CHECK(csv.rfind("p,eta\n", 0) == 0);
    CHECK(csv.find("\n0,") != std::string::npos);  // eta row at p = 0

    auto light = run("spectral " + data("light.json") + " --out /tmp/cli_spectral2.csv");
    REQUIRE(light.exit_code == 0);
    CHECK(nlohmann::json::parse(light.out).at("kappa") == "inf");
}

TEST_CASE("simulate: determinism, contracts, usage errors", "[cli]") {
    std::string base = "simulate " + data("heavy.json") +
                       " --paths 3 --horizon 1 --dt 0.05 --seed 7 --out ";
    auto first = run(base + "/tmp/cli_paths_a.csv");
    REQUIRE(first.exit_code == 0);
    auto second = run(base + "/tmp/cli_paths_b.csv");
    REQUIRE(second.exit_code == 0);
    CHECK(slurp("/tmp/cli_paths_a.csv") == slurp("/tmp/cli_paths_b.csv"));
    std::string head = slurp("/tmp/cli_paths_a.csv").substr(0, 18);
    CHECK(head == "path_id,t,r,regime");

    auto mismatch = run("simulate " + data("state_dep.json") +
                        " --scheme exact --paths 1 --out /tmp/cli_paths_c.csv");
    CHECK(mismatch.exit_code == 1);

    auto usage = run("simulate " + data("heavy.json") + " --dt 0 --paths 1");
    CHECK(usage.exit_code == 2);
}

TEST_CASE("ergodic: function specs", "[cli]") {
    auto one = run("ergodic " + data("light.json") + " --f one --horizon 50");
    REQUIRE(one.exit_code == 0);
    double one_avg = nlohmann::json::parse(one.out).at("average").get<double>();
    CHECK(std::abs(one_avg - 1.0) < 1e-9);

    auto indicator =
        run("ergodic " + data("light.json") + " --f regime:1 --horizon 2000");
    REQUIRE(indicator.exit_code == 0);
    double avg = nlohmann::json::parse(indicator.out).at("average").get<double>();
    CHECK(std::abs(avg - 0.5) < 0.02);

    auto unknown = run("ergodic " + data("light.json") + " --f junk --horizon 10");
    CHECK(unknown.exit_code == 2);
}

TEST_CASE("bessel-check and tails: smoke runs", "[cli]") {
    auto bessel = run("bessel-check " + data("heavy.json") + " --t 1 --n 2000");
    REQUIRE(bessel.exit_code == 0);
    auto payload = nlohmann::json::parse(bessel.out);
    CHECK(payload.contains("ks"));
    CHECK(payload.contains("pass"));

    auto zero_n = run("bessel-check " + data("heavy.json") + " --n 0");
    CHECK(zero_n.exit_code == 2);

    auto tails = run("tails " + data("heavy.json") +
                     " --n 800 --p-list 0.5,1 --burn-in 30");
    REQUIRE(tails.exit_code == 0);
    auto tails_payload = nlohmann::json::parse(tails.out);
    CHECK(tails_payload.at("low_n_warning").get<bool>());
    CHECK(tails_payload.at("classifier").at("tail").at("kind") == "HeavyTailed");

    auto transient_tails = run("tails " + data("transient.json") + " --n 500");
    CHECK(transient_tails.exit_code == 1);
}

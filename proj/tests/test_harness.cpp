#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "shufflesum/harness.hpp"

using namespace shufflesum;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.n = 4;
    c.epsilon = 1.0;
    c.delta_log2 = 10;
    c.trials = 50;
    c.seed = 1234;
    c.input_spec = InputSpec::kConstant;
    c.input_value = 0.5;
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SHUFFLESUM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string run_cli_capture(const std::string& args) {
    const std::string path = "/tmp/shufflesum_cli_out.txt";
    const std::string cmd =
        std::string(SHUFFLESUM_CLI_PATH) + " " + args + " > " + path + " 2>/dev/null";
    (void)std::system(cmd.c_str());
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config JSON round trip") {
    ExperimentConfig c = small_config();
    c.mode.variant = PlanVariant::kImprovedConstants;
    c.mode.sigma_rule = SigmaRule::kExactLemma4;
    c.input_spec = InputSpec::kUniform;
    const ordered_json j = config_to_json(c);
    const ExperimentConfig back = config_from_json(j);
    CHECK(config_to_json(back) == j);
}

TEST_CASE("plan report carries exactly the documented fields") {
    const ordered_json j = plan_report_to_json(plan(1000, 1.0, std::exp2(-30)));
    const std::vector<std::string> expected{
        "n", "k", "p", "q", "alpha", "epsilon", "delta", "sigma",
        "predicted_mse", "bits_per_party", "sd_bound_simplified",
        "sd_bound_exact", "delta_achieved"};
    REQUIRE(j.size() == expected.size());
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) CHECK(it.key() == expected[i]);
    CHECK(j["k"] == 162);
    CHECK(j["bits_per_party"] == 2592);
}

TEST_CASE("simulation is deterministic and noiseless errors vanish") {
    ExperimentConfig c = small_config();
    c.alpha_override = 0.0;
    const SimulationReport a = run_simulation(c);
    const SimulationReport b = run_simulation(c);
    CHECK(a.document.dump(2) == b.document.dump(2));
    CHECK(a.csv == b.csv);

    std::istringstream csv(a.csv);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "trial_index,true_sum,estimate,error");
    int rows = 0;
    while (std::getline(csv, line)) {
        CHECK(line.substr(line.rfind(',') + 1) == "0");  // error column
        ++rows;
    }
    CHECK(rows == 50);
}

TEST_CASE("report document round-trips byte-identically") {
    const SimulationReport r = run_simulation(small_config());
    const std::string once = r.document.dump(2);
    const std::string twice = ordered_json::parse(once).dump(2);
    CHECK(once == twice);
}

TEST_CASE("changing the seed changes the noisy estimates") {
    ExperimentConfig c = small_config();
    const SimulationReport a = run_simulation(c);
    c.seed = 99;
    const SimulationReport b = run_simulation(c);
    CHECK(a.csv != b.csv);
}

TEST_CASE("input file handling") {
    ExperimentConfig c = small_config();
    c.input_spec = InputSpec::kFile;
    c.input_file = "/tmp/shufflesum_inputs.txt";
    {
        std::ofstream out(c.input_file);
        out << "0.1\n0.2\n0.3\n0.4\n";
    }
    const std::vector<double> inputs = resolve_inputs(c);
    REQUIRE(inputs.size() == 4);
    CHECK(inputs[2] == doctest::Approx(0.3));

    c.input_file = "/tmp/does_not_exist_shufflesum.txt";
    CHECK_THROWS(resolve_inputs(c));
    std::remove("/tmp/shufflesum_inputs.txt");
}

TEST_CASE("verify suite dispatch") {
    CHECK_THROWS_AS(verify_suite("bogus", 1), std::invalid_argument);
}

TEST_CASE("cli: plan prints the planned k and rejects bad n") {
    const std::string out = run_cli_capture("plan --n 1000 --epsilon 1 --delta-log2 30");
    const auto j = ordered_json::parse(out.substr(0, out.find("\n#")));
    CHECK(j["k"] == 162);
    CHECK(run_cli("plan --n 1 --epsilon 1 --delta-log2 30") != 0);
    const std::string improved =
        run_cli_capture("plan --n 1000 --epsilon 1 --delta-log2 30 --mode improved");
    CHECK(ordered_json::parse(improved.substr(0, improved.find("\n#")))["k"] == 83);
}

TEST_CASE("cli: simulate writes deterministic csv") {
    const std::string base =
        "simulate --n 4 --epsilon 1 --delta-log2 10 --trials 10 --seed 7 --alpha 0 ";
    CHECK(run_cli(base + "--csv /tmp/shufflesum_a.csv") == 0);
    CHECK(run_cli(base + "--csv /tmp/shufflesum_b.csv") == 0);
    std::ifstream fa("/tmp/shufflesum_a.csv"), fb("/tmp/shufflesum_b.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    REQUIRE(!sa.str().empty());
    CHECK(sa.str() == sb.str());
    std::remove("/tmp/shufflesum_a.csv");
    std::remove("/tmp/shufflesum_b.csv");
}

TEST_CASE("cli: simulate can dump a transcript in the documented format") {
    const int rc = run_cli(
        "simulate --n 4 --epsilon 1 --delta-log2 10 --trials 2 --seed 7 "
        "--transcript-out /tmp/shufflesum_t.txt");
    CHECK(rc == 0);
    std::ifstream in("/tmp/shufflesum_t.txt");
    REQUIRE(in.good());
    const Transcript t = read_transcript(in);
    CHECK(t.n == 4);
    CHECK(t.messages.size() == t.n * t.k);
    std::remove("/tmp/shufflesum_t.txt");
}

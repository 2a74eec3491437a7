// Command-line front end: parameter planning, Monte-Carlo simulation, and
// the verification suites. See README.md for usage.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shufflesum/harness.hpp"

namespace {

using namespace shufflesum;

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

double resolve_delta(double delta, int delta_log2) {
    if (delta_log2 > 0) return std::exp2(-delta_log2);
    if (delta <= 0.0)
        throw CLI::ValidationError("--delta or --delta-log2 is required");
    return delta;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-message shuffle-model protocol for differentially "
                 "private real summation"};
    app.require_subcommand(1);

    // ---- plan ----
    std::uint64_t n = 0;
    double epsilon = 0.0, delta = 0.0;
    int delta_log2 = 0;
    std::string mode_name = "paper", sigma_rule_name_s = "paper", out_path;

    auto* plan_cmd = app.add_subcommand("plan", "Derive protocol parameters from (n, epsilon, delta)");
    plan_cmd->add_option("--n", n, "Number of parties (>= 2)")->required();
    plan_cmd->add_option("--epsilon", epsilon, "Target DP epsilon")->required();
    plan_cmd->add_option("--delta", delta, "Target DP delta (decimal)");
    plan_cmd->add_option("--delta-log2", delta_log2, "Target delta as 2^-B");
    plan_cmd->add_option("--mode", mode_name, "Message-count variant: paper|improved");
    plan_cmd->add_option("--sigma-rule", sigma_rule_name_s, "Sigma derivation: paper|exact");
    plan_cmd->add_option("--out", out_path, "Write the PlanReport JSON here");

    // ---- simulate ----
    ExperimentConfig cfg;
    std::string config_path, input_spec_name_s = "constant", transcript_out;
    bool with_timestamp = false;

    auto* sim_cmd = app.add_subcommand("simulate", "Run Monte-Carlo protocol executions");
    sim_cmd->add_option("--config", config_path, "Read the experiment config from a JSON file");
    sim_cmd->add_option("--n", cfg.n, "Number of parties");
    sim_cmd->add_option("--epsilon", cfg.epsilon, "Target DP epsilon");
    sim_cmd->add_option("--delta", cfg.delta, "Target DP delta (decimal)");
    sim_cmd->add_option("--delta-log2", cfg.delta_log2, "Target delta as 2^-B");
    sim_cmd->add_option("--trials", cfg.trials, "Number of protocol executions");
    sim_cmd->add_option("--seed", cfg.seed, "Master seed (64-bit)");
    sim_cmd->add_option("--mode", mode_name, "Message-count variant: paper|improved");
    sim_cmd->add_option("--sigma-rule", sigma_rule_name_s, "Sigma derivation: paper|exact");
    sim_cmd->add_option("--input", input_spec_name_s, "Input spec: constant|uniform|file");
    sim_cmd->add_option("--input-value", cfg.input_value, "Constant input value in [0,1]");
    sim_cmd->add_option("--input-file", cfg.input_file, "File with n inputs, one per line");
    sim_cmd->add_option("--alpha", cfg.alpha_override, "Override the planned noise magnitude");
    sim_cmd->add_flag("--secure", cfg.secure, "Entropy-backed randomness (not reproducible)");
    sim_cmd->add_option("--out", cfg.output_path, "Report JSON path");
    sim_cmd->add_option("--csv", cfg.csv_path, "Per-trial CSV path");
    sim_cmd->add_option("--transcript-out", transcript_out, "Write the trial-0 transcript here");
    sim_cmd->add_flag("--timestamp", with_timestamp,
                      "Stamp the report with wall-clock time (breaks byte determinism)");

    // ---- verify ----
    std::string suite = "all";
    std::uint64_t verify_seed = 0x5eedULL;
    auto* verify_cmd = app.add_subcommand("verify", "Run an invariant suite");
    verify_cmd->add_option("suite", suite, "noise|security|rounding|all");
    verify_cmd->add_option("--seed", verify_seed, "Suite seed");
    verify_cmd->add_option("--out", out_path, "Write the suite report JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan_cmd->parsed()) {
            const PlanMode mode{parse_variant(mode_name), parse_sigma_rule(sigma_rule_name_s)};
            const PlanReport report = plan(n, epsilon, resolve_delta(delta, delta_log2), mode);
            const ordered_json doc = plan_report_to_json(report);
            std::cout << doc.dump(2) << '\n';
            std::cout << "# k (alternate ceiling grouping): " << report.k_alternate_grouping
                      << '\n';
            std::cout << "# predicted MSE in integer-grid units: "
                      << report.predicted_mse_grid_units << '\n';
            if (!out_path.empty()) write_file(out_path, doc.dump(2) + "\n");
            return 0;
        }

        if (sim_cmd->parsed()) {
            if (!config_path.empty()) {
                std::ifstream in(config_path);
                if (!in) throw std::runtime_error("cannot open config: " + config_path);
                ordered_json j = ordered_json::parse(in);
                const std::string out_keep = cfg.output_path, csv_keep = cfg.csv_path;
                cfg = config_from_json(j);
                if (cfg.output_path.empty()) cfg.output_path = out_keep;
                if (cfg.csv_path.empty()) cfg.csv_path = csv_keep;
            } else {
                cfg.mode = PlanMode{parse_variant(mode_name), parse_sigma_rule(sigma_rule_name_s)};
                cfg.input_spec = parse_input_spec(input_spec_name_s);
            }
            if (cfg.n < 2) throw CLI::ValidationError("n must be >= 2");

            const SimulationReport report =
                run_simulation(cfg, with_timestamp ? iso_timestamp() : "");
            std::cout << report.document.dump(2) << '\n';
            if (!cfg.output_path.empty())
                write_file(cfg.output_path, report.document.dump(2) + "\n");
            if (!cfg.csv_path.empty()) write_file(cfg.csv_path, report.csv);
            if (!transcript_out.empty()) {
                const PlanReport pr = plan(cfg.n, cfg.epsilon, cfg.resolved_delta(), cfg.mode);
                ProtocolParams params = pr.params;
                if (cfg.alpha_override >= 0.0) params.alpha = cfg.alpha_override;
                const auto inputs = resolve_inputs(cfg);
                const auto [est, transcript] =
                    run_protocol_seeded(inputs, params, cfg.seed, 0);
                std::ostringstream os;
                write_transcript(os, transcript);
                write_file(transcript_out, os.str());
            }
            return 0;
        }

        if (verify_cmd->parsed()) {
            const SuiteOutcome outcome = verify_suite(suite, verify_seed);
            std::cout << outcome.document.dump(2) << '\n';
            if (!out_path.empty()) write_file(out_path, outcome.document.dump(2) + "\n");
            if (!outcome.passed) {
                std::cerr << "FAILED: " << outcome.first_failure << '\n';
                return 1;
            }
            std::cout << "verify " << suite << ": all checks passed\n";
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shufflesum/verification.hpp"

namespace shufflesum {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kArtifactVersion = "0.1.0";

inline std::string variant_name(PlanVariant v) {
    return v == PlanVariant::kImprovedConstants ? "improved" : "paper";
}
inline std::string sigma_rule_name(SigmaRule r) {
    return r == SigmaRule::kExactLemma4 ? "exact" : "paper";
}
inline PlanVariant parse_variant(const std::string& s) {
    if (s == "paper") return PlanVariant::kPaperLiteral;
    if (s == "improved") return PlanVariant::kImprovedConstants;
    throw std::invalid_argument("unknown plan mode '" + s + "' (paper|improved)");
}
inline SigmaRule parse_sigma_rule(const std::string& s) {
    if (s == "paper") return SigmaRule::kPaperLiteral;
    if (s == "exact") return SigmaRule::kExactLemma4;
    throw std::invalid_argument("unknown sigma rule '" + s + "' (paper|exact)");
}

// The documented flat PlanReport schema.
inline ordered_json plan_report_to_json(const PlanReport& r) {
    ordered_json j;
    j["n"] = r.params.n;
    j["k"] = r.params.k;
    j["p"] = r.params.p;
    j["q"] = r.params.q;
    j["alpha"] = r.params.alpha;
    j["epsilon"] = r.params.epsilon;
    j["delta"] = r.params.delta;
    j["sigma"] = r.params.sigma;
    j["predicted_mse"] = r.predicted_mse;
    j["bits_per_party"] = r.bits_per_party;
    j["sd_bound_simplified"] = r.sd_bound_simplified;
    j["sd_bound_exact"] = r.sd_bound_exact;
    j["delta_achieved"] = r.delta_achieved;
    return j;
}

enum class InputSpec { kConstant, kUniform, kFile };

struct ExperimentConfig {
    std::uint64_t n = 0;
    double epsilon = 0.0;
    double delta = 0.0;        // ignored when delta_log2 > 0
    int delta_log2 = 0;        // delta = 2^-delta_log2 when set
    std::uint64_t trials = 100;
    std::uint64_t seed = 0;
    PlanMode mode{};
    InputSpec input_spec = InputSpec::kConstant;
    double input_value = 0.5;
    std::string input_file;
    double alpha_override = -1.0;  // < 0 means use the planned alpha
    bool secure = false;           // entropy-backed randomness, not reproducible
    std::string output_path;
    std::string csv_path;

    double resolved_delta() const {
        return delta_log2 > 0 ? std::exp2(-delta_log2) : delta;
    }
};

inline std::string input_spec_name(InputSpec s) {
    switch (s) {
        case InputSpec::kConstant: return "constant";
        case InputSpec::kUniform: return "uniform";
        case InputSpec::kFile: return "file";
    }
    return "constant";
}
inline InputSpec parse_input_spec(const std::string& s) {
    if (s == "constant") return InputSpec::kConstant;
    if (s == "uniform") return InputSpec::kUniform;
    if (s == "file") return InputSpec::kFile;
    throw std::invalid_argument("unknown input spec '" + s + "'");
}

inline ordered_json config_to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["n"] = c.n;
    j["epsilon"] = c.epsilon;
    j["delta"] = c.resolved_delta();
    j["delta_log2"] = c.delta_log2;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["mode"] = variant_name(c.mode.variant);
    j["sigma_rule"] = sigma_rule_name(c.mode.sigma_rule);
    j["input_spec"] = input_spec_name(c.input_spec);
    j["input_value"] = c.input_value;
    j["input_file"] = c.input_file;
    j["alpha_override"] = c.alpha_override;
    j["secure"] = c.secure;
    return j;
}

inline ExperimentConfig config_from_json(const ordered_json& j) {
    ExperimentConfig c;
    c.n = j.at("n").get<std::uint64_t>();
    c.epsilon = j.at("epsilon").get<double>();
    c.delta = j.value("delta", 0.0);
    c.delta_log2 = j.value("delta_log2", 0);
    c.trials = j.value("trials", std::uint64_t{100});
    c.seed = j.value("seed", std::uint64_t{0});
    c.mode.variant = parse_variant(j.value("mode", std::string("paper")));
    c.mode.sigma_rule = parse_sigma_rule(j.value("sigma_rule", std::string("paper")));
    c.input_spec = parse_input_spec(j.value("input_spec", std::string("constant")));
    c.input_value = j.value("input_value", 0.5);
    c.input_file = j.value("input_file", std::string());
    c.alpha_override = j.value("alpha_override", -1.0);
    c.secure = j.value("secure", false);
    return c;
}

inline std::vector<double> resolve_inputs(const ExperimentConfig& c) {
    std::vector<double> inputs;
    switch (c.input_spec) {
        case InputSpec::kConstant:
            inputs.assign(c.n, c.input_value);
            break;
        case InputSpec::kUniform: {
            DeterministicStream rng(derive_seed(c.seed, 0x1a97));
            inputs.reserve(c.n);
            for (std::uint64_t i = 0; i < c.n; ++i) inputs.push_back(uniform01(rng));
            break;
        }
        case InputSpec::kFile: {
            std::ifstream in(c.input_file);
            if (!in)
                throw std::runtime_error("cannot open input file: " + c.input_file);
            double x;
            while (in >> x) inputs.push_back(x);
            if (inputs.size() != c.n)
                throw std::runtime_error("input file " + c.input_file + " holds " +
                                         std::to_string(inputs.size()) +
                                         " values, expected n=" + std::to_string(c.n));
            break;
        }
    }
    for (double x : inputs)
        if (!(x >= 0.0 && x <= 1.0))
            throw std::runtime_error("input outside [0,1]");
    return inputs;
}

struct SimulationReport {
    ordered_json document;
    std::string csv;
};

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Runs `trials` protocol executions with derived per-trial streams and
// assembles the report document plus the per-trial CSV. Deterministic given
// config+seed (unless secure mode is requested).
inline SimulationReport run_simulation(const ExperimentConfig& c,
                                       std::string generated_at = "") {
    if (c.trials < 1) throw std::invalid_argument("trials must be >= 1");
    PlanReport plan_report = plan(c.n, c.epsilon, c.resolved_delta(), c.mode);
    ProtocolParams params = plan_report.params;
    if (c.alpha_override >= 0.0) {
        if (!(c.alpha_override < 1.0))
            throw std::invalid_argument("alpha override must lie in [0,1)");
        params.alpha = c.alpha_override;
        plan_report.params = params;
        plan_report.predicted_mse = predicted_mse(params);
        plan_report.predicted_mse_grid_units = predicted_mse_grid_units(params);
    }
    const std::vector<double> inputs = resolve_inputs(c);
    const double true_sum = std::accumulate(inputs.begin(), inputs.end(), 0.0);

    std::vector<double> estimates(c.trials);
    if (c.secure) {
        for (std::uint64_t t = 0; t < c.trials; ++t) {
            SecureStream rng;
            estimates[t] = run_protocol_estimate_only(inputs, params, rng);
        }
    } else {
        parallel_for(c.trials, [&](std::uint64_t begin, std::uint64_t end) {
            for (std::uint64_t t = begin; t < end; ++t)
                estimates[t] = run_protocol_estimate_only_seeded(inputs, params,
                                                                 c.seed, t);
        });
    }

    std::vector<double> sq(c.trials);
    double sum_err = 0.0, sum_sq = 0.0;
    std::string csv = "trial_index,true_sum,estimate,error\n";
    for (std::uint64_t t = 0; t < c.trials; ++t) {
        const double err = estimates[t] - true_sum;
        sum_err += err;
        sq[t] = err * err;
        sum_sq += sq[t];
        csv += std::to_string(t);
        csv += ',';
        csv += format_double(true_sum);
        csv += ',';
        csv += format_double(estimates[t]);
        csv += ',';
        csv += format_double(err);
        csv += '\n';
    }
    const auto [ci_low, ci_high] = detail::bootstrap_mean_ci(sq, c.seed);

    SimulationReport report;
    report.csv = std::move(csv);
    ordered_json& doc = report.document;
    doc["config"] = config_to_json(c);
    doc["plan"] = plan_report_to_json(plan_report);
    ordered_json results;
    results["trials"] = c.trials;
    results["true_sum"] = true_sum;
    results["mean_error"] = sum_err / static_cast<double>(c.trials);
    results["mse"] = sum_sq / static_cast<double>(c.trials);
    results["ci_low"] = ci_low;
    results["ci_high"] = ci_high;
    results["predicted_mse"] = plan_report.predicted_mse;
    doc["results"] = results;
    doc["generated_at"] = generated_at;
    doc["version"] = kArtifactVersion;
    return report;
}

inline ordered_json fit_to_json(const FitResult& f) {
    ordered_json j;
    j["statistic"] = f.statistic;
    j["p_value"] = f.p_value;
    j["tv_estimate"] = f.tv_estimate;
    j["samples"] = f.samples;
    return j;
}

inline ordered_json mse_to_json(const MseResult& m) {
    ordered_json j;
    j["empirical_mse"] = m.empirical_mse;
    j["ci_low"] = m.ci_low;
    j["ci_high"] = m.ci_high;
    j["mean_error"] = m.mean_error;
    j["predicted"] = m.predicted;
    j["trials"] = m.trials;
    return j;
}

struct SuiteOutcome {
    bool passed = true;
    std::string first_failure;
    ordered_json document;

    void check(bool ok, const std::string& name) {
        if (!ok && passed) {
            passed = false;
            first_failure = name;
        }
    }
};

// Lemma-1 suite: noise-off MSE against the n/(4p^2) bound over an (n, p) grid.
inline SuiteOutcome verify_rounding(std::uint64_t seed) {
    SuiteOutcome out;
    ordered_json cells = ordered_json::array();
    const std::uint64_t grid_n[] = {2, 10, 64, 200};
    const std::uint64_t grid_p[] = {1, 2, 8, 32};
    for (std::uint64_t n : grid_n) {
        for (std::uint64_t p : grid_p) {
            ProtocolParams params{n, 3, p, 2 * n * p, 0.0, 1.0, 0.5, 1};
            DeterministicStream input_rng(derive_seed(seed, n, p));
            std::vector<double> inputs(n);
            for (auto& x : inputs) x = uniform01(input_rng);
            const MseResult mse = empirical_mse(params, inputs, 20000,
                                                derive_seed(seed, n * 1000 + p));
            const double se = (mse.ci_high - mse.ci_low) / (2.0 * 2.576);
            const double bound = rounding_mse_bound(n, p);
            const bool ok = mse.empirical_mse <= bound + 3.0 * se;
            out.check(ok, "rounding n=" + std::to_string(n) + " p=" + std::to_string(p));
            ordered_json cell = mse_to_json(mse);
            cell["n"] = n;
            cell["p"] = p;
            cell["bound"] = bound;
            cell["passed"] = ok;
            cells.push_back(cell);
        }
    }
    out.document["suite"] = "rounding";
    out.document["cells"] = cells;
    out.document["passed"] = out.passed;
    return out;
}

// Divisibility suite: sums of Polya differences against DLap over an
// (n, alpha) grid.
inline SuiteOutcome verify_noise(std::uint64_t seed) {
    SuiteOutcome out;
    ordered_json cells = ordered_json::array();
    const std::uint64_t grid_n[] = {2, 10, 50};
    const double grid_alpha[] = {0.5, 0.8, 0.95};
    for (std::uint64_t n : grid_n) {
        for (double alpha : grid_alpha) {
            // wider DLap support needs more samples: the plug-in TV estimate
            // carries O(sqrt(support/samples)) multinomial bias, and at
            // alpha=0.95 that alone would exceed the 0.01 threshold at 10^5
            const std::uint64_t samples = alpha > 0.9 ? 600000 : 100000;
            const FitResult fit = divisibility_fit(
                n, alpha, samples, derive_seed(seed, n, static_cast<std::uint64_t>(alpha * 100)));
            const bool ok = fit.p_value > 1e-3 && fit.tv_estimate < 0.01;
            out.check(ok, "noise n=" + std::to_string(n) + " alpha=" + format_double(alpha));
            ordered_json cell = fit_to_json(fit);
            cell["n"] = n;
            cell["alpha"] = alpha;
            cell["passed"] = ok;
            cells.push_back(cell);
        }
    }
    out.document["suite"] = "noise";
    out.document["cells"] = cells;
    out.document["passed"] = out.passed;
    return out;
}

// Security suite: exhaustive SD over tiny instances against the planner's
// bound, plus the symmetry and zero-distance identities.
inline SuiteOutcome verify_security(std::uint64_t /*seed*/) {
    SuiteOutcome out;
    ordered_json cells = ordered_json::array();
    for (std::uint64_t q : {std::uint64_t{2}, std::uint64_t{3}}) {
        for (std::uint64_t k = 2; k <= 6; ++k) {
            // cache the view distribution of every 2-party input vector
            std::vector<std::vector<std::uint64_t>> vectors;
            for (std::uint64_t a = 0; a < q; ++a)
                for (std::uint64_t b = 0; b < q; ++b)
                    vectors.push_back({a, b});
            const SdBound bound = sd_bound(k, q, 2);
            double max_sd = 0.0;
            for (std::size_t i = 0; i < vectors.size(); ++i) {
                for (std::size_t j = i + 1; j < vectors.size(); ++j) {
                    const auto& va = vectors[i];
                    const auto& vb = vectors[j];
                    if ((va[0] + va[1]) % q != (vb[0] + vb[1]) % q) continue;
                    const double sd = brute_force_sd(va, vb, k, q);
                    max_sd = std::max(max_sd, sd);
                    const double usable =
                        std::min(bound.simplified, bound.exact);
                    if (usable < 1.0)
                        out.check(sd <= usable, "security q=" + std::to_string(q) +
                                                    " k=" + std::to_string(k));
                    // party-order swap must leave the view unchanged
                    const std::vector<std::uint64_t> swapped{va[1], va[0]};
                    out.check(brute_force_sd(va, swapped, k, q) == 0.0,
                              "security symmetry q=" + std::to_string(q));
                }
            }
            ordered_json cell;
            cell["q"] = q;
            cell["k"] = k;
            cell["max_sd"] = max_sd;
            cell["bound_simplified"] = bound.simplified;
            cell["bound_exact"] = bound.exact;
            cells.push_back(cell);
        }
    }
    out.document["suite"] = "security";
    out.document["cells"] = cells;
    out.document["passed"] = out.passed;
    return out;
}

inline SuiteOutcome verify_suite(const std::string& name, std::uint64_t seed) {
    if (name == "rounding") return verify_rounding(seed);
    if (name == "noise") return verify_noise(seed);
    if (name == "security") return verify_security(seed);
    if (name == "all") {
        SuiteOutcome all;
        all.document["suite"] = "all";
        ordered_json parts = ordered_json::array();
        for (const char* part : {"rounding", "noise", "security"}) {
            SuiteOutcome sub = verify_suite(part, seed);
            if (!sub.passed && all.passed) {
                all.passed = false;
                all.first_failure = sub.first_failure;
            }
            parts.push_back(sub.document);
        }
        all.document["suites"] = parts;
        all.document["passed"] = all.passed;
        return all;
    }
    throw std::invalid_argument("unknown verify suite '" + name +
                                "' (noise|security|rounding|all)");
}

}  // namespace shufflesum

// Acceptance suite: runs every protocol-level guarantee end to end and
// prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

#include "shufflesum/harness.hpp"

using namespace shufflesum;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", criterion,
                what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

// 1. plan(n=1000, eps=1, delta=2^-30) reproduces the reference parameters.
void criterion_parameter_reproduction() {
    const double delta30 = std::exp2(-30);
    const PlanReport lit = plan(1000, 1.0, delta30);
    const PlanReport imp = plan(1000, 1.0, delta30,
                                {PlanVariant::kImprovedConstants, SigmaRule::kPaperLiteral});
    const bool ok = lit.params.p == 32 && lit.params.q == 64000 && lit.params.k == 162 &&
                    lit.bits_per_party == 2592 && imp.params.k == 83;
    std::ostringstream d;
    d << "p=" << lit.params.p << " q=" << lit.params.q << " k=" << lit.params.k
      << " k_improved=" << imp.params.k << " bits=" << lit.bits_per_party;
    report(1, "parameter reproduction", ok, d.str());
}

// 2. 10^4 noiseless instances return exactly the sum of recorded encodings.
void criterion_noiseless_exactness() {
    DeterministicStream meta(2024);
    std::uint64_t bad = 0;
    const int instances = 10000;
    for (int inst = 0; inst < instances; ++inst) {
        const std::uint64_t n = 2 + uniform_below(meta, 63);
        const std::uint64_t k = 1 + uniform_below(meta, 20);
        const std::uint64_t p = 1 + uniform_below(meta, 64);
        const ProtocolParams params{n, k, p, 2 * n * p, 0.0, 1.0, 0.01, 1};
        std::vector<ShareVector> shares;
        std::uint64_t encoded_sum = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double x = uniform01(meta);
            DeterministicStream party(derive_seed(55, inst, i));
            DeterministicStream replay(derive_seed(55, inst, i));
            encoded_sum += encode(x, p, replay);
            shares.push_back(local_randomize(x, params, party));
        }
        DeterministicStream shuffle_rng(derive_seed(55, inst, n));
        const Transcript t = shuffle(std::span<const ShareVector>(shares), shuffle_rng);
        if (analyze(t, params) != static_cast<double>(encoded_sum) / static_cast<double>(p))
            ++bad;
    }
    report(2, "noiseless exactness over 10^4 instances", bad == 0,
           std::to_string(bad) + " failures");
}

// 3. Empirical MSE at eps=1 is O(1): flat in n and matches the closed form.
void criterion_error_claim() {
    const double delta30 = std::exp2(-30);
    const std::uint64_t trials = 100000;
    double mse100 = 0.0;
    bool ok = true;
    std::ostringstream d;
    for (std::uint64_t n : {std::uint64_t{100}, std::uint64_t{1000}, std::uint64_t{10000}}) {
        const PlanReport pr = plan(n, 1.0, delta30);
        // x*p with fractional part 1/2 realizes the n/(4p^2) rounding term
        const double x = (std::floor(static_cast<double>(pr.params.p) / 2.0) + 0.5) /
                         static_cast<double>(pr.params.p);
        const std::vector<double> inputs(n, x);
        const MseResult mse = empirical_mse(pr.params, inputs, trials, 31337 + n);
        d << "n=" << n << " mse=" << mse.empirical_mse << " predicted=" << mse.predicted
          << "; ";
        if (n == 100) {
            mse100 = mse.empirical_mse;
            ok = ok && std::abs(mse.empirical_mse - 2.2483) <= 0.1 * 2.2483;
        } else {
            ok = ok && mse.empirical_mse <= 2.0 * mse100 && mse.empirical_mse >= 0.5 * mse100;
        }
    }
    report(3, "O(1) error across n in {100,1000,10000}", ok, d.str());
}

// 4. Noise-off MSE <= n/(4p^2) + 3 bootstrap SE across an (n, p) grid.
void criterion_rounding_bound() {
    const SuiteOutcome outcome = verify_rounding(0x5eed);
    report(4, "rounding bound grid", outcome.passed,
           outcome.passed ? "all cells within bound" : outcome.first_failure);
}

// 5. Sums of 50 Polya(1/50, 0.8) differences fit DLap(0.8).
void criterion_divisibility() {
    const FitResult fit = divisibility_fit(50, 0.8, 100000, 0xd1f);
    const bool ok = fit.p_value > 1e-3 && fit.tv_estimate < 0.01;
    std::ostringstream d;
    d << "chi2=" << fit.statistic << " p=" << fit.p_value << " tv=" << fit.tv_estimate;
    report(5, "divisibility fit (n=50, alpha=0.8)", ok, d.str());
}

// 6. Exact SD values and the oracle-vs-bound sweep at tiny scale.
void criterion_security_oracle() {
    bool ok = true;
    std::ostringstream d;
    const double sd_opposite = brute_force_sd(std::vector<std::uint64_t>{0, 0},
                                              std::vector<std::uint64_t>{1, 1}, 2, 2);
    const double sd_swapped = brute_force_sd(std::vector<std::uint64_t>{0, 1},
                                             std::vector<std::uint64_t>{1, 0}, 2, 2);
    ok = ok && sd_opposite == 0.5 && sd_swapped == 0.0;
    d << "sd((0,0),(1,1))=" << sd_opposite << " sd((0,1),(1,0))=" << sd_swapped;

    double worst_margin = 1e9;
    for (std::uint64_t q : {std::uint64_t{2}, std::uint64_t{3}}) {
        for (std::uint64_t k = 2; k <= 6; ++k) {
            const SdBound bound = sd_bound(k, q, 2);
            const double usable = std::min(bound.simplified, bound.exact);
            if (usable >= 1.0) continue;
            for (std::uint64_t a0 = 0; a0 < q; ++a0)
                for (std::uint64_t a1 = 0; a1 < q; ++a1)
                    for (std::uint64_t b0 = 0; b0 < q; ++b0) {
                        const std::uint64_t b1 = (a0 + a1 + q - b0) % q;
                        const double sd =
                            brute_force_sd(std::vector<std::uint64_t>{a0, a1},
                                           std::vector<std::uint64_t>{b0, b1}, k, q);
                        ok = ok && sd <= usable;
                        worst_margin = std::min(worst_margin, usable - sd);
                    }
        }
    }
    d << " min bound margin=" << worst_margin;
    report(6, "security oracle vs bound (q<=3, k<=6, n=2)", ok, d.str());
}

// 7. Every planned configuration meets its own sigma target; improved <= basic.
void criterion_planner_self_consistency() {
    bool ok = true;
    for (std::uint64_t n : {std::uint64_t{2}, std::uint64_t{10}, std::uint64_t{100},
                            std::uint64_t{1000}, std::uint64_t{100000},
                            std::uint64_t{10000000}}) {
        for (double eps : {0.1, 1.0, 5.0}) {
            for (int b : {5, 20, 40, 60}) {
                for (SigmaRule rule : {SigmaRule::kPaperLiteral, SigmaRule::kExactLemma4}) {
                    const double delta = std::exp2(-b);
                    const PlanReport lit = plan(n, eps, delta, {PlanVariant::kPaperLiteral, rule});
                    const PlanReport imp =
                        plan(n, eps, delta, {PlanVariant::kImprovedConstants, rule});
                    const double target = std::exp2(-static_cast<double>(lit.params.sigma));
                    ok = ok && lit.sd_bound_simplified <= target;
                    ok = ok && imp.sd_bound_exact <= target;
                    ok = ok && imp.params.k <= lit.params.k;
                    ok = ok && lit.delta_achieved <= delta && imp.delta_achieved <= delta;
                }
            }
        }
    }
    report(7, "planner self-consistency grid", ok, ok ? "all grid points" : "violation found");
}

// 8. CLI determinism: identical simulate runs are byte-identical and
// `verify all` exits 0.
void criterion_determinism() {
    const std::string cli = SHUFFLESUM_CLI_PATH;
    const std::string base =
        cli + " simulate --n 50 --epsilon 1 --delta-log2 20 --trials 200 --seed 99 ";
    bool ok = true;
    std::ostringstream d;
    for (const char* run : {"a", "b"}) {
        const std::string cmd = base + "--out /tmp/accept_" + run + ".json --csv /tmp/accept_" +
                                run + ".csv > /dev/null 2>&1";
        ok = ok && WEXITSTATUS(std::system(cmd.c_str())) == 0;
    }
    auto slurp = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const bool json_same = slurp("/tmp/accept_a.json") == slurp("/tmp/accept_b.json");
    const bool csv_same = slurp("/tmp/accept_a.csv") == slurp("/tmp/accept_b.csv");
    ok = ok && json_same && csv_same && !slurp("/tmp/accept_a.csv").empty();
    d << "json_identical=" << json_same << " csv_identical=" << csv_same;

    const int verify_rc =
        WEXITSTATUS(std::system((cli + " verify all > /dev/null 2>&1").c_str()));
    ok = ok && verify_rc == 0;
    d << " verify_all_rc=" << verify_rc;
    for (const char* p : {"/tmp/accept_a.json", "/tmp/accept_b.json", "/tmp/accept_a.csv",
                          "/tmp/accept_b.csv"})
        std::remove(p);
    report(8, "simulate determinism and verify-all exit status", ok, d.str());
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion_parameter_reproduction();
    criterion_noiseless_exactness();
    criterion_error_claim();
    criterion_rounding_bound();
    criterion_divisibility();
    criterion_security_oracle();
    criterion_planner_self_consistency();
    criterion_determinism();
    const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    std::printf("%d/8 criteria passed in %llds\n", 8 - failures,
                static_cast<long long>(elapsed));
    return failures;
}

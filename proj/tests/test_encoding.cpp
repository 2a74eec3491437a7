#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shufflesum/encoding.hpp"

using namespace shufflesum;

TEST_CASE("integral x*p encodes deterministically") {
    DeterministicStream rng(1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(encode(0.5, 2, rng) == 1);
        CHECK(encode(1.0, 17, rng) == 17);
        CHECK(encode(0.0, 9, rng) == 0);
    }
}

TEST_CASE("out-of-range inputs are rejected, not clamped") {
    DeterministicStream rng(2);
    CHECK_THROWS_AS(encode(-0.001, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(encode(1.001, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(encode(std::nan(""), 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(encode(0.5, 0, rng), std::invalid_argument);
}

TEST_CASE("x=0.25 p=2 splits evenly between 0 and 1") {
    DeterministicStream rng(3);
    const int trials = 100000;
    std::int64_t ones = 0;
    for (int i = 0; i < trials; ++i) {
        const std::uint64_t e = encode(0.25, 2, rng);
        REQUIRE((e == 0 || e == 1));
        ones += static_cast<std::int64_t>(e);
    }
    // mean 0.5 within 3 sigma, sigma = 0.5/sqrt(T)
    const double mean = static_cast<double>(ones) / trials;
    CHECK(std::abs(mean - 0.5) < 3.0 * 0.5 / std::sqrt(trials));
}

TEST_CASE("output support is {floor(xp), ceil(xp)} and unbiased") {
    DeterministicStream rng(4);
    const int trials = 100000;
    for (double x : {0.123, 0.7, 0.999, 1.0 / 3.0}) {
        for (std::uint64_t p : {std::uint64_t{1}, std::uint64_t{7}, std::uint64_t{64}}) {
            const double xp = x * static_cast<double>(p);
            const auto lo = static_cast<std::uint64_t>(std::floor(xp));
            double sum = 0.0;
            for (int i = 0; i < trials; ++i) {
                const std::uint64_t e = encode(x, p, rng);
                REQUIRE(e >= lo);
                REQUIRE(e <= lo + 1);
                sum += static_cast<double>(e);
            }
            const double mean = sum / trials / static_cast<double>(p);
            CHECK(std::abs(mean - x) < 4.0 * (0.5 / static_cast<double>(p)) / std::sqrt(trials));
        }
    }
}

TEST_CASE("rounding_mse_bound formula") {
    CHECK(rounding_mse_bound(100, 10) == doctest::Approx(0.25));
    CHECK(rounding_mse_bound(4, 2) == doctest::Approx(0.25));
    CHECK(rounding_mse_bound(1, 1) == doctest::Approx(0.25));
    CHECK_THROWS_AS(rounding_mse_bound(0, 1), std::invalid_argument);
}

TEST_CASE("sum-of-encodings MSE stays under n/(4p^2)") {
    DeterministicStream rng(5);
    const std::uint64_t n = 100, p = 8;
    std::vector<double> xs(n);
    for (auto& x : xs) x = uniform01(rng);
    double true_sum = 0.0;
    for (double x : xs) true_sum += x;

    const int trials = 10000;
    double mse = 0.0;
    for (int t = 0; t < trials; ++t) {
        double s = 0.0;
        for (double x : xs) s += static_cast<double>(encode(x, p, rng));
        const double err = s / static_cast<double>(p) - true_sum;
        mse += err * err;
    }
    mse /= trials;
    // bound plus generous slack for Monte-Carlo noise
    CHECK(mse <= rounding_mse_bound(n, p) * 1.15);
}

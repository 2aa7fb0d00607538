#include "gfast/de_discrete.hpp"

#include <doctest.h>

#include <cmath>

using namespace gfast;
using namespace gfast::de;

namespace {

double ones_fraction(double lambda, int draws, Rng& rng) {
    std::vector<std::uint8_t> mask(1000);
    long ones = 0;
    for (int i = 0; i < draws; ++i) {
        make_bit_mask(lambda, rng, mask);
        for (auto m : mask) {
            REQUIRE(m <= 1);
            ones += m;
        }
    }
    return static_cast<double>(ones) / (1000.0 * draws);
}

} // namespace

TEST_CASE("mask density follows the normal CDF") {
    Rng rng(1);
    CHECK(ones_fraction(1.0, 1000, rng) == doctest::Approx(0.5 * std::erfc(-1.0 / std::sqrt(2.0))).epsilon(0.01));
    CHECK(ones_fraction(1e-9, 1000, rng) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("mask with sampled lambda returns that lambda") {
    Rng rng(2);
    std::vector<std::uint8_t> mask(16);
    for (int i = 0; i < 100; ++i) {
        const double l = make_bit_mask(0.5, 0.1, rng, mask);
        CHECK(l > 0.0);
        CHECK(l <= 1.0);
    }
}

TEST_CASE("XOR/AND mutation arithmetic") {
    std::vector<std::uint8_t> donor(2);
    const std::vector<std::uint8_t> b{1, 0}, best{1, 1}, r2{0, 1}, r3{0, 1}, z{1, 1};
    mutate_bits_with(b, best, r2, r3, z, donor);
    CHECK(donor == std::vector<std::uint8_t>{1, 1});

    const std::vector<std::uint8_t> zero{0, 0};
    mutate_bits_with(b, best, std::vector<std::uint8_t>{1, 0}, r3, zero, donor);
    CHECK(donor == b);

    mutate_bits_with(b, b, r2, r2, z, donor);
    CHECK(donor == b);
}

TEST_CASE("donors stay binary") {
    Rng rng(3);
    DeParams p;
    p.population_size = 20;
    p.greedy = 0.1;
    const auto pop = initialize_bits([](std::span<const std::uint8_t>) { return 1.0; }, 32, p, 5);
    std::vector<std::uint8_t> mask(32), donor(32);
    for (int i = 0; i < 200; ++i) {
        make_bit_mask(rng.uniform(), rng, mask);
        mutate_bits(i % 20, pop, mask, rng, donor);
        for (auto v : donor) CHECK(v <= 1);
    }
}

TEST_CASE("bit crossover extremes and inheritance rate") {
    Rng rng(4);
    const std::vector<std::uint8_t> target(100000, 0), donor(100000, 1);
    std::vector<std::uint8_t> trial(target.size());
    CHECK(crossover_bits(target, donor, 1.0, rng, trial) == 100000);
    CHECK(trial == donor);
    crossover_bits(target, donor, 0.0, rng, trial);
    CHECK(trial == target);
    CHECK(std::abs(crossover_bits(target, donor, 0.3, rng, trial) / 100000.0 - 0.3) < 0.01);
}

TEST_CASE("bit selection keeps the trial on ties") {
    CHECK(bit_trial_survives(0.5, 1.0));
    CHECK(bit_trial_survives(1.0, 1.0));
    CHECK_FALSE(bit_trial_survives(1.5, 1.0));
}

TEST_CASE("bit adaptation mirrors the continuous rule") {
    const std::vector<double> cr{0.7}, lam{1.0, 2.0};
    const auto a = adapt_bits({0.5, 0.5}, cr, lam, 0.8);
    const auto b = adapt({0.5, 0.5}, cr, lam, 0.8);
    CHECK(a.mu_cr == b.mu_cr);
    CHECK(a.mu_lambda == b.mu_lambda);
}

TEST_CASE("finds a hidden 16-bit word") {
    Rng rng(7);
    int found = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::vector<std::uint8_t> hidden(16);
        for (auto& b : hidden) b = static_cast<std::uint8_t>(rng.below(2));
        auto hamming = [&](std::span<const std::uint8_t> x) {
            double d = 0;
            for (int i = 0; i < 16; ++i) d += x[i] != hidden[i];
            return d;
        };
        const auto r = run_bits(hamming, 16, detection_defaults(), seed);
        found += r.best == hidden;
    }
    CHECK(found >= 99);
}

TEST_CASE("binary runs stall, stay monotone and are reproducible") {
    const DeParams p = detection_defaults();
    const auto flat = run_bits([](std::span<const std::uint8_t>) { return 2.0; }, 8, p, 3);
    CHECK(flat.generations == p.stall_generations);
    CHECK(flat.best_cf == 2.0);

    auto weighted = [](std::span<const std::uint8_t> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] ? 1.0 : -0.5) * std::sin(1.0 + i) + 0.1 * x[i] * x[(i + 3) % x.size()];
        return s;
    };
    const auto a = run_bits(weighted, 24, p, 11);
    const auto b = run_bits(weighted, 24, p, 11);
    CHECK(a.best == b.best);
    CHECK(a.best_cf_trace == b.best_cf_trace);
    CHECK(a.eval_count == p.population_size * (1 + a.generations));
    for (std::size_t i = 1; i < a.best_cf_trace.size(); ++i) CHECK(a.best_cf_trace[i] <= a.best_cf_trace[i - 1]);
    CHECK(a.best_cf == weighted(a.best));
}

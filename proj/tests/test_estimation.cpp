#include "gfast/channel.hpp"
#include "gfast/estimation.hpp"

#include <doctest.h>

#include <cmath>

using namespace gfast;

namespace {

CMatrix random_matrix(int rows, int cols, Rng& rng) {
    CMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
    return m;
}

CMatrix noise(int rows, int cols, double sigma_w2, Rng& rng) {
    return random_matrix(rows, cols, rng) * std::sqrt(sigma_w2);
}

CMatrix qpsk_block(int lines, int symbols, Rng& rng) {
    CMatrix x(lines, symbols);
    const double a = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < lines; ++i)
        for (int j = 0; j < symbols; ++j) x(i, j) = Complex(rng.below(2) ? a : -a, rng.below(2) ? a : -a);
    return x;
}

} // namespace

TEST_CASE("DFT pilots are orthogonal with energy S_p * E_s") {
    for (int lines : {1, 2, 4}) {
        for (int sp : {4, 8, 16}) {
            const CMatrix p = make_dft_pilots(lines, sp, 2.0);
            const CMatrix g = p * p.adjoint();
            CHECK((g - 2.0 * sp * CMatrix::Identity(lines, lines)).norm() < 1e-10);
        }
    }
    CHECK_THROWS_AS(make_dft_pilots(4, 3), ConfigError);
}

TEST_CASE("block statistics reproduce the direct cost") {
    Rng rng(1);
    const CMatrix x = random_matrix(3, 20, rng);
    const CMatrix y = random_matrix(3, 20, rng);
    const CeStatistics stats(x, y);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix h = random_matrix(3, 3, rng);
        CHECK(stats.cost(h) == doctest::Approx(cf_ce(h, x, y)).epsilon(1e-10));
        CHECK(stats.cost_packed(pack_channel(h)) == doctest::Approx(cf_ce(h, x, y)).epsilon(1e-10));
        CHECK((unpack_channel(pack_channel(h), 3) - h).norm() == 0.0);
    }
}

TEST_CASE("noiseless LS recovers the channel exactly") {
    Rng rng(2);
    const CMatrix p = make_dft_pilots(4, 4);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix h = random_matrix(4, 4, rng);
        const auto est = ls_estimate(p, h * p);
        CHECK((est.matrix - h).norm() < 1e-10);
        CHECK(est.cf < 1e-20);
    }
}

TEST_CASE("rank-deficient training is not identifiable") {
    Rng rng(3);
    CHECK_THROWS_AS(ls_estimate(random_matrix(4, 3, rng), random_matrix(4, 3, rng)), IdentifiabilityError);
    CMatrix x = random_matrix(2, 6, rng);
    x.row(1) = x.row(0);
    CHECK_THROWS_AS(ls_estimate(x, random_matrix(2, 6, rng)), IdentifiabilityError);
    CHECK_THROWS_AS(dea_ce(random_matrix(4, 3, rng), random_matrix(4, 3, rng), de::channel_estimation_defaults(), 1),
                    IdentifiabilityError);
}

TEST_CASE("LS is the exact minimizer of the CE cost") {
    Rng rng(4);
    const CMatrix x = qpsk_block(4, 16, rng);
    const CMatrix y = random_matrix(4, 4, rng) * x + noise(4, 16, 0.1, rng);
    const auto ls = ls_estimate(x, y);
    for (double step : {1e-1, 1e-3, 1e-6}) {
        for (int trial = 0; trial < 200; ++trial) {
            const CMatrix h = ls.matrix + step * random_matrix(4, 4, rng);
            CHECK(cf_ce(h, x, y) >= ls.cf);
        }
    }
}

TEST_CASE("LS NMSE on four DFT pilots sits at the bound") {
    Rng rng(5);
    const double sigma_w2 = 0.01;
    const CMatrix p = make_dft_pilots(4, 4);
    double sum = 0.0, bound = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const CMatrix h = random_matrix(4, 4, rng);
        const auto est = ls_estimate(p, h * p + noise(4, 4, sigma_w2, rng));
        sum += nmse(est.matrix, h);
        bound += frame_ncrlb(h, 4, 1.0, sigma_w2);
    }
    CHECK(sum / bound == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("LS is unbiased") {
    Rng rng(6);
    const CMatrix h = random_matrix(3, 3, rng);
    const CMatrix p = make_dft_pilots(3, 4);
    const double sigma_w2 = 0.5;
    const int n = 10000;
    CMatrix mean = CMatrix::Zero(3, 3);
    for (int trial = 0; trial < n; ++trial) mean += ls_estimate(p, h * p + noise(3, 4, sigma_w2, rng)).matrix;
    mean /= n;
    // Per-entry variance sigma_w2 / (S E_s), split evenly over real and imaginary parts.
    const double se = std::sqrt(sigma_w2 / 4.0 / 2.0 / n);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(mean(i, j).real() - h(i, j).real()) < 3.0 * se);
            CHECK(std::abs(mean(i, j).imag() - h(i, j).imag()) < 3.0 * se);
        }
}

TEST_CASE("empirical LS MSE does not fall below the Cramer-Rao bound") {
    Rng rng(7);
    for (int lines : {2, 4}) {
        for (int sp : {4, 16}) {
            for (double sigma_w2 : {0.01, 0.3}) {
                const CMatrix p = make_dft_pilots(lines, sp);
                const CMatrix h = random_matrix(lines, lines, rng);
                const int n = 4000;
                double sum = 0.0, sum2 = 0.0;
                for (int trial = 0; trial < n; ++trial) {
                    const CMatrix e = ls_estimate(p, h * p + noise(lines, sp, sigma_w2, rng)).matrix - h;
                    const double per_entry = e.squaredNorm() / (lines * lines);
                    sum += per_entry;
                    sum2 += per_entry * per_entry;
                }
                const double mean = sum / n;
                const double se = std::sqrt((sum2 / n - mean * mean) / n);
                // LS attains the bound, so the sentinel allows three standard errors of sampling noise.
                CHECK(mean >= crlb(sp, 1.0, sigma_w2 / 2.0) - 3.0 * se);
            }
        }
    }
}

TEST_CASE("bound arithmetic") {
    CHECK(ncrlb(1, 1.0, 0.5, 1.0) == 1.0);
    CHECK(ncrlb(8, 1.0, 0.5, 2.0) == doctest::Approx(ncrlb(4, 1.0, 0.5, 2.0) / 2.0));
    CHECK(10.0 * std::log10(ncrlb(4, 1.0, 0.1, 1.0) / ncrlb(256, 1.0, 0.1, 1.0)) ==
          doctest::Approx(18.0618).epsilon(1e-4));
    CHECK(crlb(4, 2.0, 0.3) == doctest::Approx(0.075));
    CHECK_THROWS_AS(crlb(0, 1.0, 1.0), UsageError);
    CHECK_THROWS_AS(crlb(1, 0.0, 1.0), UsageError);
    CHECK_THROWS_AS(crlb(1, 1.0, 0.0), UsageError);
    CHECK_THROWS_AS(ncrlb(1, 1.0, 1.0, 0.0), UsageError);

    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const int s = 1 + static_cast<int>(rng.below(300));
        const double es = 0.1 + rng.uniform(), s2 = 1e-3 + rng.uniform(), r2 = 0.1 + 3.0 * rng.uniform();
        CHECK(std::abs(ncrlb(s, es, s2, r2) - 2.0 * s2 / (s * es * r2)) <= 1e-12 * (2.0 * s2 / (s * es * r2)));
        const CMatrix h = random_matrix(4, 4, rng);
        const double want = 16.0 * s2 / (s * es * h.squaredNorm());
        CHECK(frame_ncrlb(h, s, es, s2) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("NMSE examples") {
    Rng rng(9);
    const CMatrix h = random_matrix(3, 3, rng);
    CHECK(nmse(h, h) == 0.0);
    CHECK(nmse(CMatrix::Zero(3, 3), h) == doctest::Approx(1.0));
    CHECK(nmse(2.0 * h, h) == doctest::Approx(1.0));
    CHECK_THROWS_AS(nmse(h, CMatrix::Zero(3, 3)), UsageError);
    CHECK_THROWS_AS(nmse(CMatrix::Zero(2, 2), h), UsageError);
}

TEST_CASE("DEA-CE solves the noiseless two-line problem") {
    Rng rng(10);
    const CMatrix p = make_dft_pilots(2, 4);
    // At 100 generations every run is still contracting geometrically with median CF ~1e-6.
    auto params = de::channel_estimation_defaults();
    params.max_generations = 200;
    int ok = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const CMatrix h = normalize_direct_gain({0, 0.0, random_matrix(2, 2, rng)}).matrix;
        const auto est = dea_ce(p, h * p, params, seed);
        ok += est.cf < 1e-6;
        CHECK(est.eval_count == 100 * (1 + est.generations));
    }
    CHECK(ok >= 95);
}

TEST_CASE("DEA-CE reaches the LS cost on noisy two-line blocks") {
    Rng rng(11);
    int ok = 0;
    for (int seed = 0; seed < 50; ++seed) {
        const CMatrix h = normalize_direct_gain({0, 0.0, random_matrix(2, 2, rng)}).matrix;
        const CMatrix x = qpsk_block(2, 16, rng);
        const CMatrix y = h * x + noise(2, 16, 0.01, rng);
        const auto ls = ls_estimate(x, y);
        const auto dea = dea_ce(x, y, de::channel_estimation_defaults(), seed);
        CHECK(dea.cf >= ls.cf * (1.0 - 1e-12));
        ok += dea.cf <= ls.cf * 1.001;
    }
    CHECK(ok >= 48);
}

TEST_CASE("DEA-CE observer sees a non-increasing cost") {
    Rng rng(12);
    const CMatrix p = make_dft_pilots(2, 8);
    const CMatrix h = random_matrix(2, 2, rng);
    double last = 1e300;
    int calls = 0;
    const auto est = dea_ce(p, h * p + noise(2, 8, 0.01, rng), de::channel_estimation_defaults(), 3,
                            [&](int g, const CMatrix& best, double cf) {
                                CHECK(g == calls++);
                                CHECK(cf <= last);
                                CHECK(best.rows() == 2);
                                last = cf;
                            });
    CHECK(calls == est.generations + 1);
    CHECK(last == est.cf);
}

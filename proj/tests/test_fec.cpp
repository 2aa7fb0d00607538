#include "gfast/fec.hpp"
#include "gfast/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace gfast;

namespace {

TurboCode make_code(int k, std::uint64_t seed = 0x7a11) {
    TurboCodeConfig cfg;
    cfg.block_length_bits = k;
    cfg.interleaver_seed = seed;
    return TurboCode(cfg);
}

Bits random_bits(std::size_t n, Rng& rng) {
    Bits b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng.below(2));
    return b;
}

// BPSK 0 -> +1, 1 -> -1; LLR 2y/sigma^2.
std::vector<double> channel_llrs(const Bits& coded, double sigma2, Rng& rng) {
    std::vector<double> llr(coded.size());
    const double sigma = std::sqrt(sigma2);
    for (std::size_t i = 0; i < coded.size(); ++i) {
        const double y = (coded[i] ? -1.0 : 1.0) + sigma * rng.normal();
        llr[i] = 2.0 * y / sigma2;
    }
    return llr;
}

std::vector<double> noiseless_llrs(const Bits& coded, double magnitude = 10.0) {
    std::vector<double> llr(coded.size());
    for (std::size_t i = 0; i < coded.size(); ++i) llr[i] = coded[i] ? -magnitude : magnitude;
    return llr;
}

} // namespace

TEST_CASE("all-zero input encodes to all zeros") {
    const auto code = make_code(1024);
    const Bits coded = code.encode(Bits(1024, 0));
    CHECK(coded.size() == 2056);
    CHECK(std::all_of(coded.begin(), coded.end(), [](auto b) { return b == 0; }));
}

TEST_CASE("configuration and length checks") {
    TurboCodeConfig cfg;
    cfg.block_length_bits = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_inner_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const auto code = make_code(16);
    CHECK_THROWS_AS(code.encode(Bits(15, 0)), UsageError);
    CHECK_THROWS_AS(code.decode(std::vector<double>(39, 0.0)), UsageError);
    CHECK_THROWS_AS(Interleaver(0, 1), ConfigError);
}

TEST_CASE("coded layout interleaves the two punctured parity streams") {
    Rng rng(1);
    const auto code = make_code(64);
    const Bits info = random_bits(64, rng);
    const Bits coded = code.encode(info);
    Bits s1, p1, s2, p2;
    rsc_encode(info, s1, p1);
    const Bits permuted = code.interleaver().interleave(info);
    rsc_encode(permuted, s2, p2);
    REQUIRE(s1.size() == 66);
    for (int k = 0; k < 64; ++k) {
        CHECK(coded[2 * k] == info[k]);
        CHECK(coded[2 * k + 1] == (k % 2 == 0 ? p1[k] : p2[k]));
    }
    for (int t = 0; t < 2; ++t) {
        CHECK(coded[128 + 2 * t] == s1[64 + t]);
        CHECK(coded[129 + 2 * t] == p1[64 + t]);
        CHECK(coded[132 + 2 * t] == s2[64 + t]);
        CHECK(coded[133 + 2 * t] == p2[64 + t]);
    }
}

TEST_CASE("constituent encoder matches the feedback-7 recursion and terminates") {
    const Bits info{1, 0, 1, 1, 0, 0, 1};
    Bits sys, par;
    rsc_encode(info, sys, par);
    int d1 = 0, d2 = 0;
    for (std::size_t k = 0; k < sys.size(); ++k) {
        const int u = k < info.size() ? info[k] : (d1 ^ d2);
        CHECK(sys[k] == u);
        const int a = u ^ d1 ^ d2;
        CHECK(par[k] == (a ^ d2));
        d2 = d1;
        d1 = a;
    }
    CHECK(d1 == 0);
    CHECK(d2 == 0);
}

TEST_CASE("the code is linear and injective on 8-bit blocks") {
    const auto code = make_code(8);
    std::set<Bits> seen;
    std::vector<Bits> words(256);
    for (int v = 0; v < 256; ++v) {
        Bits info(8);
        for (int i = 0; i < 8; ++i) info[i] = static_cast<std::uint8_t>((v >> i) & 1);
        words[v] = code.encode(info);
        seen.insert(words[v]);
    }
    CHECK(seen.size() == 256);
    for (int a = 0; a < 256; a += 7)
        for (int b = 0; b < 256; b += 11) {
            Bits sum(words[a].size());
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = words[a][i] ^ words[b][i];
            CHECK(sum == words[a ^ b]);
        }
}

TEST_CASE("noiseless decoding recovers every 8-bit block in one iteration") {
    const auto code = make_code(8);
    for (int v = 0; v < 256; ++v) {
        Bits info(8);
        for (int i = 0; i < 8; ++i) info[i] = static_cast<std::uint8_t>((v >> i) & 1);
        const auto res = code.decode(noiseless_llrs(code.encode(info)));
        CHECK(res.hard_bits == info);
        CHECK(res.iterations == 1);
    }
}

TEST_CASE("noiseless decoding of random 1024-bit blocks") {
    Rng rng(2);
    const auto code = make_code(1024);
    for (int trial = 0; trial < 1000; ++trial) {
        const Bits info = random_bits(1024, rng);
        const Bits coded = code.encode(info);
        const auto res = code.decode(noiseless_llrs(coded));
        REQUIRE(res.hard_bits == info);
        for (std::size_t i = 0; i < coded.size(); ++i) REQUIRE((res.c_po.values[i] < 0.0) == (coded[i] == 1));
    }
}

TEST_CASE("no decoded errors over a million bits at 5 dB") {
    Rng rng(3);
    const auto code = make_code(1024);
    const double ebn0 = std::pow(10.0, 0.5);
    const double sigma2 = 1.0 / (2.0 * 0.5 * ebn0);
    long errors = 0;
    for (int block = 0; block < 977; ++block) {
        const Bits info = random_bits(1024, rng);
        const auto res = code.decode(channel_llrs(code.encode(info), sigma2, rng));
        for (int i = 0; i < 1024; ++i) errors += res.hard_bits[i] != info[i];
    }
    CHECK(errors == 0);
}

TEST_CASE("decoding beats uncoded hard decisions at 1.5 dB") {
    Rng rng(4);
    const auto code = make_code(1024);
    const double sigma2 = 1.0 / (2.0 * 0.5 * std::pow(10.0, 0.15));
    long coded_errors = 0, raw_errors = 0;
    for (int block = 0; block < 50; ++block) {
        const Bits info = random_bits(1024, rng);
        const auto llr = channel_llrs(code.encode(info), sigma2, rng);
        const auto res = code.decode(llr);
        for (int i = 0; i < 1024; ++i) {
            coded_errors += res.hard_bits[i] != info[i];
            raw_errors += (llr[2 * i] < 0.0) != (info[i] == 1);
        }
    }
    CHECK(coded_errors * 20 < raw_errors);
}

TEST_CASE("extrinsic output is posterior minus prior") {
    Rng rng(5);
    const auto code = make_code(128);
    const auto llr = channel_llrs(code.encode(random_bits(128, rng)), 0.8, rng);
    const auto res = code.decode(llr);
    CHECK(res.c_po.role == LlrRole::c_po);
    CHECK(res.c_e.role == LlrRole::c_e);
    REQUIRE(res.c_e.values.size() == llr.size());
    for (std::size_t i = 0; i < llr.size(); ++i) CHECK(res.c_e.values[i] == res.c_po.values[i] - llr[i]);
    CHECK(res.iterations >= 1);
    CHECK(res.iterations <= 8);
}

TEST_CASE("saturated inputs stay finite and clamped") {
    Rng rng(6);
    const auto code = make_code(64);
    const Bits info = random_bits(64, rng);
    const auto res = code.decode(noiseless_llrs(code.encode(info), 1e9));
    CHECK(res.hard_bits == info);
    for (int i = 0; i < 64; ++i) {
        CHECK(std::isfinite(res.c_po.values[2 * i]));
        CHECK(std::abs(res.c_po.values[2 * i]) <= 50.0);
    }
}

TEST_CASE("zero observations return the prior") {
    Rng rng(7);
    const std::size_t n = 34;
    std::vector<double> zero(n, 0.0), prior(n, 0.0), app(n), appp(n);
    for (std::size_t i = 0; i < 32; ++i) prior[i] = 4.0 * rng.normal();
    bcjr_rsc(zero, zero, prior, app, appp);
    for (std::size_t i = 0; i < 32; ++i) CHECK(app[i] == doctest::Approx(prior[i]).epsilon(1e-9));
}

TEST_CASE("interleaver is a seeded permutation with an exact inverse") {
    const Interleaver a(1000, 9), b(1000, 9), c(1000, 10);
    CHECK(std::ranges::equal(a.permutation(), b.permutation()));
    CHECK_FALSE(std::ranges::equal(a.permutation(), c.permutation()));
    std::vector<int> sorted(a.permutation().begin(), a.permutation().end());
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 1000; ++i) CHECK(sorted[i] == i);
    std::vector<double> x(1000);
    for (int i = 0; i < 1000; ++i) x[i] = i * 0.5;
    const auto y = a.interleave(x);
    for (int i = 0; i < 1000; ++i) CHECK(y[i] == x[a.permutation()[i]]);
    CHECK(a.deinterleave(y) == x);
    CHECK_THROWS_AS(a.interleave(std::vector<double>(999)), UsageError);
}

TEST_CASE("re-encoding and re-modulation") {
    const auto code = make_code(1024);
    const Interleaver pi(2056, 0xc4a2);
    const auto qpsk = Constellation::qam(4);
    const auto zeros = reencode_remodulate(Bits(1024, 0), code, pi, qpsk);
    REQUIRE(zeros.size() == 1028);
    for (auto s : zeros) CHECK(std::abs(s - qpsk.point_for_label(0)) < 1e-15);

    Rng rng(8);
    const Bits info = random_bits(1024, rng);
    const Bits tx = pi.interleave(code.encode(info));
    const auto syms = reencode_remodulate(info, code, pi, qpsk);
    for (std::size_t s = 0; s < syms.size(); ++s)
        CHECK(syms[s] == map_bits(std::span<const std::uint8_t>(tx).subspan(2 * s, 2), qpsk));

    CHECK_THROWS_AS(reencode_remodulate(info, code, pi, Constellation::qam(64)), UsageError);
}

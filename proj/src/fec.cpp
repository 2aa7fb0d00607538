#include "gfast/fec.hpp"

#include "gfast/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace gfast {

void TurboCodeConfig::validate() const {
    if (block_length_bits < 1) throw ConfigError("block_length_bits must be at least 1");
    if (max_inner_iterations < 1) throw ConfigError("max_inner_iterations must be at least 1");
}

Interleaver::Interleaver(int length, std::uint64_t seed) : perm_(static_cast<std::size_t>(std::max(length, 0))) {
    if (length < 1) throw ConfigError("interleaver length must be positive");
    std::iota(perm_.begin(), perm_.end(), 0);
    Rng rng(seed);
    for (std::size_t i = perm_.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(perm_[i], perm_[j]);
    }
}

void Interleaver::check(std::size_t in, std::size_t out) const {
    if (in != perm_.size() || out != perm_.size())
        throw UsageError("interleaver length " + std::to_string(perm_.size()) + ", got " + std::to_string(in));
}

namespace {

constexpr int kStates = 4;
constexpr double kNeg = -1e30;

struct Branch {
    int next;
    int parity;
};

// State s = d1 << 1 | d2; a = u ^ d1 ^ d2 enters the register, parity = a ^ d2.
constexpr Branch branch(int s, int u) {
    const int d1 = s >> 1;
    const int d2 = s & 1;
    const int a = u ^ d1 ^ d2;
    return {(a << 1) | d1, a ^ d2};
}

inline double max_star(double a, double b) {
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double sign_of(int bit) { return bit ? -1.0 : 1.0; }

} // namespace

void rsc_encode(std::span<const std::uint8_t> info, Bits& systematic, Bits& parity) {
    const std::size_t n = info.size() + TurboCodeConfig::kMemory;
    systematic.resize(n);
    parity.resize(n);
    int s = 0;
    for (std::size_t k = 0; k < n; ++k) {
        // Terminating input u = d1 ^ d2 feeds a zero into the register.
        const int u = k < info.size() ? (info[k] & 1) : ((s >> 1) ^ (s & 1));
        const auto b = branch(s, u);
        systematic[k] = static_cast<std::uint8_t>(u);
        parity[k] = static_cast<std::uint8_t>(b.parity);
        s = b.next;
    }
}

void bcjr_rsc(std::span<const double> sys, std::span<const double> par, std::span<const double> prior,
              std::span<double> app_info, std::span<double> app_parity) {
    const std::size_t n = sys.size();
    std::vector<std::array<double, kStates>> alpha(n + 1);
    std::vector<std::array<double, kStates>> beta(n + 1);
    alpha[0].fill(kNeg);
    alpha[0][0] = 0.0;
    beta[n].fill(kNeg);
    beta[n][0] = 0.0;

    auto gamma = [&](std::size_t k, int u, int p) {
        return 0.5 * (sign_of(u) * (sys[k] + prior[k]) + sign_of(p) * par[k]);
    };

    for (std::size_t k = 0; k < n; ++k) {
        auto& next = alpha[k + 1];
        next.fill(kNeg);
        for (int s = 0; s < kStates; ++s) {
            if (alpha[k][s] <= kNeg) continue;
            for (int u = 0; u < 2; ++u) {
                const auto b = branch(s, u);
                next[b.next] = max_star(next[b.next], alpha[k][s] + gamma(k, u, b.parity));
            }
        }
        const double norm = *std::max_element(next.begin(), next.end());
        for (auto& v : next) v -= norm;
    }
    for (std::size_t k = n; k-- > 0;) {
        auto& cur = beta[k];
        cur.fill(kNeg);
        for (int s = 0; s < kStates; ++s)
            for (int u = 0; u < 2; ++u) {
                const auto b = branch(s, u);
                if (beta[k + 1][b.next] <= kNeg) continue;
                cur[s] = max_star(cur[s], beta[k + 1][b.next] + gamma(k, u, b.parity));
            }
        const double norm = *std::max_element(cur.begin(), cur.end());
        for (auto& v : cur) v -= norm;
    }
    for (std::size_t k = 0; k < n; ++k) {
        double u0 = kNeg, u1 = kNeg, p0 = kNeg, p1 = kNeg;
        for (int s = 0; s < kStates; ++s) {
            if (alpha[k][s] <= kNeg) continue;
            for (int u = 0; u < 2; ++u) {
                const auto b = branch(s, u);
                if (beta[k + 1][b.next] <= kNeg) continue;
                const double m = alpha[k][s] + gamma(k, u, b.parity) + beta[k + 1][b.next];
                (u ? u1 : u0) = max_star(u ? u1 : u0, m);
                (b.parity ? p1 : p0) = max_star(b.parity ? p1 : p0, m);
            }
        }
        app_info[k] = clamp_llr(u0 - u1);
        app_parity[k] = clamp_llr(p0 - p1);
    }
}

TurboCode::TurboCode(const TurboCodeConfig& cfg) : cfg_(cfg), pi_((cfg.validate(), cfg.block_length_bits), cfg.interleaver_seed) {}

Bits TurboCode::encode(std::span<const std::uint8_t> info) const {
    const int k = cfg_.block_length_bits;
    if (static_cast<int>(info.size()) != k)
        throw UsageError("encode expects " + std::to_string(k) + " bits, got " + std::to_string(info.size()));
    Bits sys1, par1, sys2, par2;
    rsc_encode(info, sys1, par1);
    Bits permuted(info.size());
    pi_.interleave<std::uint8_t>(info, permuted);
    rsc_encode(permuted, sys2, par2);

    Bits out(static_cast<std::size_t>(cfg_.coded_length()));
    for (int i = 0; i < k; ++i) {
        out[2 * i] = info[i] & 1;
        out[2 * i + 1] = (i % 2 == 0) ? par1[i] : par2[i];
    }
    std::size_t pos = 2 * static_cast<std::size_t>(k);
    for (int t = 0; t < TurboCodeConfig::kMemory; ++t) {
        out[pos++] = sys1[k + t];
        out[pos++] = par1[k + t];
    }
    for (int t = 0; t < TurboCodeConfig::kMemory; ++t) {
        out[pos++] = sys2[k + t];
        out[pos++] = par2[k + t];
    }
    return out;
}

DecodeResult TurboCode::decode(std::span<const double> c_pr) const {
    const int k = cfg_.block_length_bits;
    const int mem = TurboCodeConfig::kMemory;
    const auto n = static_cast<std::size_t>(k + mem);
    if (static_cast<int>(c_pr.size()) != cfg_.coded_length())
        throw UsageError("decode expects " + std::to_string(cfg_.coded_length()) + " LLRs, got " +
                         std::to_string(c_pr.size()));

    std::vector<double> sys1(n), par1(n, 0.0), sys2(n), par2(n, 0.0);
    for (int i = 0; i < k; ++i) {
        sys1[i] = clamp_llr(c_pr[2 * i]);
        (i % 2 == 0 ? par1 : par2)[i] = clamp_llr(c_pr[2 * i + 1]);
    }
    pi_.interleave<double>(std::span<const double>(sys1.data(), k), std::span<double>(sys2.data(), k));
    const std::size_t tail = 2 * static_cast<std::size_t>(k);
    for (int t = 0; t < mem; ++t) {
        sys1[k + t] = clamp_llr(c_pr[tail + 2 * t]);
        par1[k + t] = clamp_llr(c_pr[tail + 2 * t + 1]);
        sys2[k + t] = clamp_llr(c_pr[tail + 2 * mem + 2 * t]);
        par2[k + t] = clamp_llr(c_pr[tail + 2 * mem + 2 * t + 1]);
    }

    std::vector<double> prior1(n, 0.0), prior2(n, 0.0);
    std::vector<double> app1(n), appp1(n), app2(n), appp2(n);
    std::vector<double> ext1(k), ext2(k), ext2_nat(k);

    DecodeResult res;
    res.hard_bits.resize(k);
    Bits previous(k);
    for (int i = 0; i < k; ++i) previous[i] = sys1[i] < 0.0;

    for (int it = 1; it <= cfg_.max_inner_iterations; ++it) {
        bcjr_rsc(sys1, par1, prior1, app1, appp1);
        for (int i = 0; i < k; ++i) ext1[i] = app1[i] - sys1[i] - prior1[i];
        pi_.interleave<double>(ext1, std::span<double>(prior2.data(), k));
        for (int i = 0; i < k; ++i) prior2[i] = clamp_llr(prior2[i]);

        bcjr_rsc(sys2, par2, prior2, app2, appp2);
        for (int i = 0; i < k; ++i) ext2[i] = app2[i] - sys2[i] - prior2[i];
        pi_.deinterleave<double>(ext2, ext2_nat);
        for (int i = 0; i < k; ++i) prior1[i] = clamp_llr(ext2_nat[i]);

        res.iterations = it;
        bool stable = true;
        for (int i = 0; i < k; ++i) {
            const std::uint8_t b = (sys1[i] + ext1[i] + ext2_nat[i]) < 0.0;
            stable = stable && b == previous[i];
            res.hard_bits[i] = b;
        }
        if (cfg_.early_stop && stable) break;
        previous = res.hard_bits;
    }

    res.c_po.role = LlrRole::c_po;
    res.c_po.values.resize(c_pr.size());
    auto& po = res.c_po.values;
    for (int i = 0; i < k; ++i) {
        po[2 * i] = clamp_llr(sys1[i] + ext1[i] + ext2_nat[i]);
        if (i % 2 == 0) {
            po[2 * i + 1] = appp1[i];
        } else {
            // Parity 2 at encoder time i sits in its own (interleaved) trellis at step i.
            po[2 * i + 1] = appp2[i];
        }
    }
    for (int t = 0; t < mem; ++t) {
        po[tail + 2 * t] = app1[k + t];
        po[tail + 2 * t + 1] = appp1[k + t];
        po[tail + 2 * mem + 2 * t] = app2[k + t];
        po[tail + 2 * mem + 2 * t + 1] = appp2[k + t];
    }
    res.c_e.role = LlrRole::c_e;
    res.c_e.values.resize(c_pr.size());
    for (std::size_t i = 0; i < c_pr.size(); ++i) res.c_e.values[i] = po[i] - c_pr[i];
    return res;
}

std::vector<Complex> reencode_remodulate(std::span<const std::uint8_t> info, const TurboCode& code,
                                         const Interleaver& channel_pi, const Constellation& c) {
    const Bits coded = code.encode(info);
    Bits tx(coded.size());
    channel_pi.interleave<std::uint8_t>(coded, tx);
    const int k = c.bits_per_symbol();
    if (tx.size() % static_cast<std::size_t>(k) != 0)
        throw UsageError("coded length is not a multiple of the bits per symbol");
    std::vector<Complex> symbols(tx.size() / k);
    for (std::size_t s = 0; s < symbols.size(); ++s)
        symbols[s] = map_bits(std::span<const std::uint8_t>(tx).subspan(s * k, k), c);
    return symbols;
}

} // namespace gfast

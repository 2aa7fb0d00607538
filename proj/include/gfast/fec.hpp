#pragma once

#include "gfast/modem.hpp"
#include "gfast/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gfast {

// Rate-1/2 PCCC of two (7,5) recursive systematic encoders, feedback polynomial 7.
//
// Coded layout for K information bits:
//   [u_0, p_0, u_1, p_1, ..., u_{K-1}, p_{K-1}, tail1 (4 bits), tail2 (4 bits)]
// where p_k is parity of encoder 1 for even k and parity of encoder 2 (at its
// interleaved time k) for odd k. Each tail holds the two terminating steps of one
// encoder as u, p, u, p and is never punctured.
struct TurboCodeConfig {
    int block_length_bits = 1024;
    std::uint64_t interleaver_seed = 0x7a11;
    int max_inner_iterations = 8;
    bool early_stop = true;

    static constexpr int kMemory = 2;
    static constexpr int kTailBits = 2 * 2 * kMemory;

    int coded_length() const { return 2 * block_length_bits + kTailBits; }
    void validate() const;
};

enum class LlrRole { m_pr, m_po, m_e, c_pr, c_po, c_e };

struct LlrFrame {
    std::vector<double> values;
    LlrRole role = LlrRole::c_pr;
};

// Seeded pseudorandom permutation; interleave writes out[i] = in[perm[i]].
class Interleaver {
public:
    Interleaver(int length, std::uint64_t seed);

    int length() const { return static_cast<int>(perm_.size()); }
    std::span<const int> permutation() const { return perm_; }

    template <typename T>
    void interleave(std::span<const T> in, std::span<T> out) const {
        check(in.size(), out.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) out[i] = in[perm_[i]];
    }
    template <typename T>
    void deinterleave(std::span<const T> in, std::span<T> out) const {
        check(in.size(), out.size());
        for (std::size_t i = 0; i < perm_.size(); ++i) out[perm_[i]] = in[i];
    }
    template <typename T>
    std::vector<T> interleave(const std::vector<T>& in) const {
        std::vector<T> out(in.size());
        interleave<T>(std::span<const T>(in), std::span<T>(out));
        return out;
    }
    template <typename T>
    std::vector<T> deinterleave(const std::vector<T>& in) const {
        std::vector<T> out(in.size());
        deinterleave<T>(std::span<const T>(in), std::span<T>(out));
        return out;
    }

private:
    void check(std::size_t in, std::size_t out) const;
    std::vector<int> perm_;
};

struct DecodeResult {
    LlrFrame c_po;
    LlrFrame c_e;
    Bits hard_bits;
    int iterations = 0;
};

class TurboCode {
public:
    explicit TurboCode(const TurboCodeConfig& cfg);

    const TurboCodeConfig& config() const { return cfg_; }
    const Interleaver& interleaver() const { return pi_; }

    Bits encode(std::span<const std::uint8_t> info) const;
    DecodeResult decode(std::span<const double> c_pr) const;

private:
    TurboCodeConfig cfg_;
    Interleaver pi_;
};

// Log-MAP pass over one terminated constituent trellis of n = K + 2 steps.
// sys/par/prior are LLRs (positive favours 0); par may be 0 where punctured and
// prior is 0 on the tail steps. Writes a-posteriori LLRs of the input and parity bits.
void bcjr_rsc(std::span<const double> sys, std::span<const double> par, std::span<const double> prior,
              std::span<double> app_info, std::span<double> app_parity);

// Encoder 1 or 2 output for an input sequence, including the two terminating steps.
void rsc_encode(std::span<const std::uint8_t> info, Bits& systematic, Bits& parity);

// info -> turbo encode -> channel interleave -> map_bits, one symbol per bits_per_symbol coded bits.
std::vector<Complex> reencode_remodulate(std::span<const std::uint8_t> info, const TurboCode& code,
                                         const Interleaver& channel_pi, const Constellation& c);

} // namespace gfast

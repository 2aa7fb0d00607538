#pragma once

#include "gfast/channel.hpp"
#include "gfast/de_common.hpp"
#include "gfast/detectors.hpp"
#include "gfast/fec.hpp"
#include "gfast/modem.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gfast {

// One frame: S_pilot DFT pilots followed by S_data data symbols on every active tone.
//
// Each user's data is split into code blocks of `block_symbols` consecutive data
// symbols across all active tones. Within a block, channel-interleaved coded bit
// j * bps + b rides on symbol j, which sits at data symbol j / T of the block on
// tone j % T, so every block spans all tones.
struct FrameConfig {
    int lines = 4;
    int order = 16;
    int pilot_symbols = 4;
    int data_symbols = 252;
    int num_tones_active = 256;
    int turbo_outer_iters = 6;
    double snr_db = 20.0; // Eb/N0
    int block_symbols = 0; // 0 picks the smallest divisor of data_symbols giving >= 1024 coded bits
    int inner_iterations = 8;
    int decoder_iterations = 8;
    std::uint64_t code_seed = 0x7a11;
    std::uint64_t channel_interleaver_seed = 0xc4a2;

    static constexpr double kCodeRate = 0.5;
    static constexpr int kMaxLines = 64;

    int total_symbols() const { return pilot_symbols + data_symbols; }
    int resolved_block_symbols() const;
    int blocks_per_user() const { return data_symbols / resolved_block_symbols(); }
    int coded_bits_per_block() const;
    int info_bits_per_block() const;
    TurboCodeConfig code_config() const;
    void validate() const;
};

// sigma_w^2 = E_s / (log2 M * R * 10^(Eb/N0 / 10)).
double noise_variance(double snr_db, int order, double code_rate = FrameConfig::kCodeRate,
                      double symbol_energy = 1.0);

enum class CeMode { dea, ls, perfect };

struct ReceiverConfig {
    CeMode ce = CeMode::dea;
    DetectorKind detector = DetectorKind::dea;
    de::DeParams ce_params = de::channel_estimation_defaults();
    de::DeParams mud_params = de::detection_defaults();
    std::optional<ImpulseNoiseConfig> impulse;
    Exec exec = Exec::parallel;
};

struct IterationTrace {
    int iteration = 0;
    double nmse = 0.0; // mean over tones
    double ber = 0.0;  // information bits after decoding
    double ser = 0.0;  // hard detector output
    std::int64_t ce_evals = 0;
    std::int64_t mud_evals = 0;
    std::int64_t bit_errors = 0;
    std::int64_t bits = 0;
    std::int64_t symbol_errors = 0;
    std::int64_t symbols = 0;
    std::vector<double> tone_nmse;
    std::vector<double> tone_ser;
};

// Everything the transmitter put on the air for one frame.
struct TransmittedFrame {
    std::vector<Bits> info;                // [user * blocks + block]
    std::vector<CMatrix> x;                // per tone, L x S_total, pilots first
    std::vector<CMatrix> y;                // per tone, L x S_total
    std::vector<std::vector<int>> indices; // per tone, point index of x per (user, data symbol), row-major L x S_data
    std::vector<bool> infected;            // per OFDM symbol
};

class FrameCodec {
public:
    explicit FrameCodec(const FrameConfig& frame);

    const FrameConfig& frame() const { return frame_; }
    const Constellation& constellation() const { return c_; }
    const TurboCode& code() const { return code_; }
    const Interleaver& channel_interleaver() const { return pi_; }

    // Data symbols of every (user, block) laid onto per-tone L x S_data matrices.
    std::vector<CMatrix> modulate(const std::vector<Bits>& info) const;

    // Location of symbol j of a block.
    int tone_of(int j) const { return j % frame_.num_tones_active; }
    int data_symbol_of(int block, int j) const {
        return block * frame_.resolved_block_symbols() + j / frame_.num_tones_active;
    }

private:
    FrameConfig frame_;
    Constellation c_;
    TurboCode code_;
    Interleaver pi_;
};

TransmittedFrame transmit_frame(const std::vector<ToneChannel>& truth, const FrameCodec& codec, double sigma_w2,
                                const std::optional<ImpulseNoiseConfig>& impulse, std::uint64_t seed);

// Re-encoded, re-modulated data symbols per tone; empty decoded set gives an empty result.
std::vector<CMatrix> virtual_pilot_update(const std::vector<Bits>& decoded, const FrameCodec& codec);

struct FrameMetrics {
    double ber = 0.0;
    double ser = 0.0;
    double nmse = 0.0;
    std::int64_t bit_errors = 0;
    std::int64_t bits = 0;
    std::int64_t symbol_errors = 0;
    std::int64_t symbols = 0;
    std::vector<double> tone_nmse;
    std::vector<double> tone_ser;
};

// detected[t] holds point indices row-major L x S_data like TransmittedFrame::indices.
FrameMetrics compute_metrics(const TransmittedFrame& truth, const std::vector<std::vector<int>>& detected,
                             const std::vector<Bits>& decoded, const std::vector<CMatrix>& h_hat,
                             const std::vector<ToneChannel>& h_true);

// Outer loop: CE on pilots plus virtual pilots, per-symbol MUD, soft demap and turbo decode,
// re-encode. Entry 0 is the pilot-only pass; one more entry per outer iteration.
std::vector<IterationTrace> run_turbo(const std::vector<ToneChannel>& truth, const FrameConfig& frame,
                                      const ReceiverConfig& rx, std::uint64_t seed);

} // namespace gfast

#include "gfast/turbo_engine.hpp"

#include "gfast/estimation.hpp"
#include "gfast/parallel.hpp"

#include <cmath>
#include <string>

namespace gfast {

namespace {

// Substream tags.
enum : std::uint64_t { kInfoTag = 1, kImpulseTag = 2, kNoiseTag = 3, kTxTag = 10, kCeTag = 20, kMudTag = 21 };

} // namespace

int FrameConfig::resolved_block_symbols() const {
    if (block_symbols > 0) return block_symbols;
    const int bps = static_cast<int>(std::lround(std::log2(order)));
    for (int d = 1; d <= data_symbols; ++d)
        if (data_symbols % d == 0 && num_tones_active * d * bps >= 1024) return d;
    return data_symbols;
}

int FrameConfig::coded_bits_per_block() const {
    const int bps = static_cast<int>(std::lround(std::log2(order)));
    return num_tones_active * resolved_block_symbols() * bps;
}

int FrameConfig::info_bits_per_block() const { return (coded_bits_per_block() - TurboCodeConfig::kTailBits) / 2; }

TurboCodeConfig FrameConfig::code_config() const {
    TurboCodeConfig cfg;
    cfg.block_length_bits = info_bits_per_block();
    cfg.interleaver_seed = code_seed;
    cfg.max_inner_iterations = decoder_iterations;
    return cfg;
}

void FrameConfig::validate() const {
    if (lines < 1 || lines > kMaxLines)
        throw ConfigError("lines must lie in [1, " + std::to_string(kMaxLines) + "], got " + std::to_string(lines));
    if (pilot_symbols < lines)
        throw ConfigError("S_pilot = " + std::to_string(pilot_symbols) + " is below L = " + std::to_string(lines));
    if (data_symbols < 1) throw ConfigError("S_data must be positive");
    if (num_tones_active < 1) throw ConfigError("num_tones_active must be positive");
    if (turbo_outer_iters < 0) throw ConfigError("turbo_outer_iters must be non-negative");
    if (inner_iterations < 1 || decoder_iterations < 1) throw ConfigError("iteration limits must be positive");
    if (block_symbols < 0 || (block_symbols > 0 && data_symbols % block_symbols != 0))
        throw ConfigError("block_symbols must divide S_data");
    const int coded = coded_bits_per_block();
    if (coded % 2 != 0 || coded < TurboCodeConfig::kTailBits + 2)
        throw ConfigError("code block of " + std::to_string(coded) + " bits cannot hold a rate-1/2 codeword");
    (void)Constellation::qam(order);
}

double noise_variance(double snr_db, int order, double code_rate, double symbol_energy) {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return symbol_energy / (std::log2(static_cast<double>(order)) * code_rate * std::pow(10.0, snr_db / 10.0));
}

FrameCodec::FrameCodec(const FrameConfig& frame)
    : frame_((frame.validate(), frame)), c_(Constellation::qam(frame.order)), code_(frame.code_config()),
      pi_(frame.coded_bits_per_block(), frame.channel_interleaver_seed) {}

std::vector<CMatrix> FrameCodec::modulate(const std::vector<Bits>& info) const {
    const int lines = frame_.lines;
    const int blocks = frame_.blocks_per_user();
    if (static_cast<int>(info.size()) != lines * blocks)
        throw UsageError("expected " + std::to_string(lines * blocks) + " code blocks, got " +
                         std::to_string(info.size()));
    std::vector<CMatrix> x(frame_.num_tones_active, CMatrix::Zero(lines, frame_.data_symbols));
    for (int l = 0; l < lines; ++l)
        for (int b = 0; b < blocks; ++b) {
            const auto syms = reencode_remodulate(info[l * blocks + b], code_, pi_, c_);
            for (int j = 0; j < static_cast<int>(syms.size()); ++j) x[tone_of(j)](l, data_symbol_of(b, j)) = syms[j];
        }
    return x;
}

TransmittedFrame transmit_frame(const std::vector<ToneChannel>& truth, const FrameCodec& codec, double sigma_w2,
                                const std::optional<ImpulseNoiseConfig>& impulse, std::uint64_t seed) {
    const auto& f = codec.frame();
    if (static_cast<int>(truth.size()) != f.num_tones_active)
        throw ConfigError("channel has " + std::to_string(truth.size()) + " tones, frame expects " +
                          std::to_string(f.num_tones_active));
    const int blocks = f.blocks_per_user();
    const int k = f.info_bits_per_block();
    TransmittedFrame tx;
    tx.info.resize(static_cast<std::size_t>(f.lines) * blocks);
    for (int l = 0; l < f.lines; ++l)
        for (int b = 0; b < blocks; ++b) {
            Rng rng(derive_seed(seed, {kInfoTag, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(b)}));
            auto& bits = tx.info[l * blocks + b];
            bits.resize(k);
            for (auto& v : bits) v = static_cast<std::uint8_t>(rng() >> 63);
        }
    const auto data = codec.modulate(tx.info);
    const CMatrix pilots = make_dft_pilots(f.lines, f.pilot_symbols);

    tx.infected.assign(f.total_symbols(), false);
    if (impulse) {
        impulse->validate();
        Rng rng(derive_seed(seed, {kImpulseTag}));
        tx.infected = draw_impulse_flags(impulse->kappa, f.total_symbols(), rng);
    }

    const auto& c = codec.constellation();
    tx.x.resize(f.num_tones_active);
    tx.y.resize(f.num_tones_active);
    tx.indices.resize(f.num_tones_active);
    for (int t = 0; t < f.num_tones_active; ++t) {
        if (truth[t].lines() != f.lines) throw ConfigError("channel line count does not match the frame");
        auto& x = tx.x[t];
        x.resize(f.lines, f.total_symbols());
        x.leftCols(f.pilot_symbols) = pilots;
        x.rightCols(f.data_symbols) = data[t];
        auto& idx = tx.indices[t];
        idx.resize(static_cast<std::size_t>(f.lines) * f.data_symbols);
        for (int l = 0; l < f.lines; ++l)
            for (int s = 0; s < f.data_symbols; ++s) idx[l * f.data_symbols + s] = nearest_index(data[t](l, s), c);
        Rng rng(derive_seed(seed, {kNoiseTag, static_cast<std::uint64_t>(t)}));
        auto& y = tx.y[t];
        y.resize(f.lines, f.total_symbols());
        for (int s = 0; s < f.total_symbols(); ++s)
            y.col(s) = apply_channel(truth[t].matrix, x.col(s), sigma_w2, impulse, tx.infected[s], rng);
    }
    return tx;
}

std::vector<CMatrix> virtual_pilot_update(const std::vector<Bits>& decoded, const FrameCodec& codec) {
    if (decoded.empty()) return {};
    for (const auto& b : decoded)
        if (static_cast<int>(b.size()) != codec.frame().info_bits_per_block())
            throw UsageError("decoded block has " + std::to_string(b.size()) + " bits, expected " +
                             std::to_string(codec.frame().info_bits_per_block()));
    return codec.modulate(decoded);
}

FrameMetrics compute_metrics(const TransmittedFrame& truth, const std::vector<std::vector<int>>& detected,
                             const std::vector<Bits>& decoded, const std::vector<CMatrix>& h_hat,
                             const std::vector<ToneChannel>& h_true) {
    FrameMetrics m;
    for (std::size_t i = 0; i < truth.info.size(); ++i) {
        const auto& ref = truth.info[i];
        for (std::size_t j = 0; j < ref.size(); ++j) m.bit_errors += i < decoded.size() && decoded[i][j] != ref[j];
        m.bits += static_cast<std::int64_t>(ref.size());
    }
    const std::size_t tones = truth.indices.size();
    m.tone_ser.resize(tones);
    m.tone_nmse.resize(tones);
    for (std::size_t t = 0; t < tones; ++t) {
        std::int64_t errs = 0;
        for (std::size_t n = 0; n < truth.indices[t].size(); ++n) errs += detected[t][n] != truth.indices[t][n];
        m.symbol_errors += errs;
        m.symbols += static_cast<std::int64_t>(truth.indices[t].size());
        m.tone_ser[t] = static_cast<double>(errs) / static_cast<double>(truth.indices[t].size());
        m.tone_nmse[t] = nmse(h_hat[t], h_true[t].matrix);
        m.nmse += m.tone_nmse[t];
    }
    m.nmse /= static_cast<double>(tones);
    m.ber = m.bits ? static_cast<double>(m.bit_errors) / static_cast<double>(m.bits) : 0.0;
    m.ser = m.symbols ? static_cast<double>(m.symbol_errors) / static_cast<double>(m.symbols) : 0.0;
    return m;
}

namespace {

struct PassOutput {
    std::vector<std::vector<int>> detected; // per tone, L x S_data
    std::vector<Bits> decoded;
    std::int64_t mud_evals = 0;
};

// Steps (b) and (c) of one outer iteration for fixed channel estimates.
PassOutput detect_and_decode(const TransmittedFrame& tx, const std::vector<CMatrix>& h_hat, const FrameCodec& codec,
                             const ReceiverConfig& rx, double sigma_w2, std::uint64_t seed, int iteration) {
    const auto& f = codec.frame();
    const auto& c = codec.constellation();
    const int tones = f.num_tones_active;
    const int sd = f.data_symbols;
    const int lines = f.lines;
    const int bps = c.bits_per_symbol();
    const int blocks = f.blocks_per_user();
    const int d = f.resolved_block_symbols();
    const bool par = rx.exec == Exec::parallel;

    PassOutput out;
    out.detected.assign(tones, std::vector<int>(static_cast<std::size_t>(lines) * sd));
    std::vector<EffectiveChannel> eff(static_cast<std::size_t>(tones) * sd);
    std::vector<std::int64_t> evals(eff.size(), 0);

    parallel_for(static_cast<long>(eff.size()), par, [&](long n) {
        const int t = static_cast<int>(n / sd);
        const int s = static_cast<int>(n % sd);
        const CVector y = tx.y[t].col(f.pilot_symbols + s);
        const CMatrix& h = h_hat[t];
        DetectionResult r;
        switch (rx.detector) {
        case DetectorKind::sud:
            r = sud_detect(y, h, c);
            eff[n] = sud_channel(y, h, sigma_w2, c.energy());
            break;
        case DetectorKind::zf:
            r = zf_detect(y, h, c);
            eff[n] = zf_channel(y, h, sigma_w2);
            break;
        case DetectorKind::ml:
            r = ml_detect(y, h, c, Exec::serial);
            eff[n] = cancelled_channel(r, h, y, sigma_w2);
            break;
        case DetectorKind::dea:
            r = dea_mud(y, h, c, rx.mud_params,
                        derive_seed(seed, {kMudTag, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(t),
                                           static_cast<std::uint64_t>(s)}));
            eff[n] = cancelled_channel(r, h, y, sigma_w2);
            break;
        }
        evals[n] = r.eval_count;
        for (int l = 0; l < lines; ++l)
            out.detected[t][l * sd + s] =
                c.index_of_label(pack_label(std::span<const std::uint8_t>(r.bits).subspan(l * bps, bps)));
    });
    for (auto e : evals) out.mud_evals += e;

    // Soft demapper <-> turbo decoder exchange on the fixed hard detections.
    const int coded = f.coded_bits_per_block();
    std::vector<std::vector<double>> m_pr(static_cast<std::size_t>(lines) * blocks, std::vector<double>(coded, 0.0));
    std::vector<std::vector<double>> m_e(m_pr.size(), std::vector<double>(coded, 0.0));
    out.decoded.assign(m_pr.size(), Bits{});
    std::vector<Bits> previous;
    const auto& code = codec.code();
    const auto& pi = codec.channel_interleaver();

    for (int inner = 1; inner <= f.inner_iterations; ++inner) {
        parallel_for(static_cast<long>(eff.size()), par, [&](long n) {
            const int t = static_cast<int>(n / sd);
            const int s = static_cast<int>(n % sd);
            const int b = s / d;
            const std::size_t pos = static_cast<std::size_t>((s % d) * tones + t) * bps;
            double pr[FrameConfig::kMaxLines * 12], po[FrameConfig::kMaxLines * 12], ext[FrameConfig::kMaxLines * 12];
            for (int l = 0; l < lines; ++l)
                for (int j = 0; j < bps; ++j) pr[l * bps + j] = m_pr[l * blocks + b][pos + j];
            const std::size_t nb = static_cast<std::size_t>(lines) * bps;
            soft_from_effective(eff[n], {pr, nb}, c, {po, nb}, {ext, nb});
            for (int l = 0; l < lines; ++l)
                for (int j = 0; j < bps; ++j) m_e[l * blocks + b][pos + j] = ext[l * bps + j];
        });
        parallel_for(static_cast<long>(m_pr.size()), par, [&](long i) {
            const auto c_pr = pi.deinterleave(m_e[i]);
            const auto res = code.decode(c_pr);
            out.decoded[i] = res.hard_bits;
            pi.interleave<double>(res.c_e.values, m_pr[i]);
            for (auto& v : m_pr[i]) v = clamp_llr(v);
        });
        if (inner > 1 && out.decoded == previous) break;
        previous = out.decoded;
    }
    return out;
}

} // namespace

std::vector<IterationTrace> run_turbo(const std::vector<ToneChannel>& truth, const FrameConfig& frame,
                                      const ReceiverConfig& rx, std::uint64_t seed) {
    const FrameCodec codec(frame);
    rx.ce_params.validate();
    rx.mud_params.validate();
    const double sigma_w2 = noise_variance(frame.snr_db, frame.order);
    const auto tx = transmit_frame(truth, codec, sigma_w2, rx.impulse, derive_seed(seed, {kTxTag}));
    const CMatrix pilots = make_dft_pilots(frame.lines, frame.pilot_symbols);
    const int tones = frame.num_tones_active;
    const bool par = rx.exec == Exec::parallel;

    std::vector<IterationTrace> trace;
    std::vector<CMatrix> virtual_data;
    std::vector<CMatrix> h_hat(tones);
    std::vector<std::int64_t> ce_evals(tones);

    for (int it = 0; it <= frame.turbo_outer_iters; ++it) {
        parallel_for(tones, par, [&](long t) {
            ce_evals[t] = 0;
            if (rx.ce == CeMode::perfect) {
                h_hat[t] = truth[t].matrix;
                return;
            }
            CMatrix xb;
            CMatrix yb;
            if (virtual_data.empty()) {
                xb = pilots;
                yb = tx.y[t].leftCols(frame.pilot_symbols);
            } else {
                xb.resize(frame.lines, frame.total_symbols());
                xb << pilots, virtual_data[t];
                yb = tx.y[t];
            }
            if (rx.ce == CeMode::ls) {
                h_hat[t] = ls_estimate(xb, yb).matrix;
            } else {
                const auto est = dea_ce(xb, yb, rx.ce_params,
                                        derive_seed(seed, {kCeTag, static_cast<std::uint64_t>(it),
                                                           static_cast<std::uint64_t>(t)}));
                h_hat[t] = est.matrix;
                ce_evals[t] = est.eval_count;
            }
        });

        const auto pass = detect_and_decode(tx, h_hat, codec, rx, sigma_w2, seed, it);
        const auto m = compute_metrics(tx, pass.detected, pass.decoded, h_hat, truth);

        IterationTrace entry;
        entry.iteration = it;
        entry.nmse = m.nmse;
        entry.ber = m.ber;
        entry.ser = m.ser;
        for (auto e : ce_evals) entry.ce_evals += e;
        entry.mud_evals = pass.mud_evals;
        entry.bit_errors = m.bit_errors;
        entry.bits = m.bits;
        entry.symbol_errors = m.symbol_errors;
        entry.symbols = m.symbols;
        entry.tone_nmse = m.tone_nmse;
        entry.tone_ser = m.tone_ser;
        trace.push_back(std::move(entry));

        if (it < frame.turbo_outer_iters) virtual_data = virtual_pilot_update(pass.decoded, codec);
    }
    return trace;
}

} // namespace gfast

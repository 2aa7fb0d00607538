#pragma once

#include "gfast/rng.hpp"
#include "gfast/types.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

namespace gfast {

struct ToneGrid {
    int num_tones = 256;
    double f_start_hz = 2e6;
    double f_end_hz = 212e6;

    double spacing_hz() const { return (f_end_hz - f_start_hz) / num_tones; }
    double center_freq_hz(int tone) const { return f_start_hz + tone * spacing_hz(); }
    void validate() const;
};

// 2-212 MHz split into 4096 tones.
ToneGrid full_grid();

struct ToneChannel {
    int tone_index = 0;
    double center_freq_hz = 0.0;
    CMatrix matrix;

    int lines() const { return static_cast<int>(matrix.rows()); }
};

// Log-domain stand-in for measured binder data:
//   direct dB = -direct_atten_coeff * loop_length_m * sqrt(f / MHz)
//   FEXT dB   = direct dB + fext_base_db + fext_freq_slope * log10(f / MHz)
//               + fext_length_term * log10(loop_length_m) + N(0, fext_spread_db) per line pair
// so crosstalk couples through the same insertion loss as the direct path.
// with i.i.d. uniform phases per entry and tone. fext_base_db = -inf disables crosstalk.
struct CableModelParams {
    double loop_length_m = 100.0;
    double direct_atten_coeff = 0.02;
    double fext_base_db = -64.0;
    double fext_freq_slope = 20.0;
    double fext_length_term = 10.0;
    double fext_spread_db = 4.0;
    std::uint64_t seed = 2024;

    static constexpr double kNoCrosstalk = -std::numeric_limits<double>::infinity();
    void validate() const;
};

struct ImpulseNoiseConfig {
    double kappa = 0.0;
    double power_ratio_db = 20.0;

    double sigma_u2(double sigma_w2) const { return sigma_w2 * std::pow(10.0, power_ratio_db / 10.0); }
    void validate() const;
};

std::vector<ToneChannel> synthesize_channel(const ToneGrid& grid, const CableModelParams& params, int lines);

// Tone subset of a synthesized grid, evaluated only at the requested tone indices.
std::vector<ToneChannel> synthesize_tones(const ToneGrid& grid, const CableModelParams& params, int lines,
                                          const std::vector<int>& tone_indices);

// Divides the matrix by the RMS direct-path magnitude so that mean |H_ll|^2 = 1.
ToneChannel normalize_direct_gain(const ToneChannel& tone);

// CSV rows `tone,l,m,re,im` with 1-based line indices and 0-based tone indices.
void save_channel_csv(const std::filesystem::path& path, const std::vector<ToneChannel>& tones);
std::vector<ToneChannel> load_channel_csv(const std::filesystem::path& path,
                                          const std::optional<ToneGrid>& grid = std::nullopt);

// Circularly-symmetric CN(0, variance * I) vector.
CVector complex_gaussian(int n, double variance, Rng& rng);

// Y = H X + W (+ U when `infected`).
CVector apply_channel(const CMatrix& h, const CVector& x, double sigma_w2,
                      const std::optional<ImpulseNoiseConfig>& impulse, bool infected, Rng& rng);

// One Bernoulli(kappa) infection flag per OFDM symbol, shared by all tones.
std::vector<bool> draw_impulse_flags(double kappa, int num_symbols, Rng& rng);

// trace((H^H H)^-1) / L: noise power gain of the ZF canceller.
double noise_enhancement(const CMatrix& h);

} // namespace gfast

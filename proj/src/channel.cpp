#include "gfast/channel.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>

namespace gfast {

void ToneGrid::validate() const {
    if (num_tones < 1) throw ConfigError("tone grid needs at least one tone");
    if (!(f_end_hz > f_start_hz)) throw ConfigError("tone grid end frequency must exceed start frequency");
}

ToneGrid full_grid() { return ToneGrid{4096, 2e6, 212e6}; }

void CableModelParams::validate() const {
    if (!(loop_length_m > 0.0)) throw ConfigError("loop length must be positive");
    if (!(direct_atten_coeff > 0.0)) throw ConfigError("direct attenuation coefficient must be positive");
    if (fext_spread_db < 0.0) throw ConfigError("FEXT spread must be non-negative");
}

void ImpulseNoiseConfig::validate() const {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw ConfigError("impulse probability kappa must lie in [0,1]");
}

namespace {

Complex polar_db(double db, double phase) { return std::polar(std::pow(10.0, db / 20.0), phase); }

ToneChannel synthesize_one(const ToneGrid& grid, const CableModelParams& params, int lines, int tone,
                           const std::vector<double>& pair_offsets_db) {
    ToneChannel out;
    out.tone_index = tone;
    out.center_freq_hz = grid.center_freq_hz(tone);
    const double f_mhz = out.center_freq_hz / 1e6;
    const double direct_db = -params.direct_atten_coeff * params.loop_length_m * std::sqrt(f_mhz);
    const bool crosstalk = std::isfinite(params.fext_base_db);
    const double fext_db = direct_db + params.fext_base_db + params.fext_freq_slope * std::log10(f_mhz) +
                           params.fext_length_term * std::log10(params.loop_length_m);

    Rng rng(derive_seed(params.seed, {2, static_cast<std::uint64_t>(tone)}));
    out.matrix = CMatrix::Zero(lines, lines);
    for (int l = 0; l < lines; ++l) {
        for (int m = 0; m < lines; ++m) {
            const double phase = 2.0 * std::numbers::pi * rng.uniform();
            if (l == m) {
                out.matrix(l, m) = polar_db(direct_db, phase);
            } else if (crosstalk) {
                out.matrix(l, m) = polar_db(fext_db + pair_offsets_db[l * lines + m], phase);
            }
        }
    }
    return out;
}

std::vector<double> pair_offsets(const CableModelParams& params, int lines) {
    std::vector<double> offsets(static_cast<std::size_t>(lines) * lines, 0.0);
    Rng rng(derive_seed(params.seed, {1}));
    for (auto& o : offsets) o = params.fext_spread_db * rng.normal();
    return offsets;
}

} // namespace

std::vector<ToneChannel> synthesize_tones(const ToneGrid& grid, const CableModelParams& params, int lines,
                                          const std::vector<int>& tone_indices) {
    grid.validate();
    params.validate();
    if (lines < 1) throw ConfigError("number of lines must be >= 1");
    const auto offsets = pair_offsets(params, lines);
    std::vector<ToneChannel> out;
    out.reserve(tone_indices.size());
    for (int t : tone_indices) {
        if (t < 0 || t >= grid.num_tones) throw ConfigError("tone index " + std::to_string(t) + " outside grid");
        out.push_back(synthesize_one(grid, params, lines, t, offsets));
    }
    return out;
}

std::vector<ToneChannel> synthesize_channel(const ToneGrid& grid, const CableModelParams& params, int lines) {
    grid.validate();
    std::vector<int> all(grid.num_tones);
    for (int t = 0; t < grid.num_tones; ++t) all[t] = t;
    return synthesize_tones(grid, params, lines, all);
}

ToneChannel normalize_direct_gain(const ToneChannel& tone) {
    ToneChannel out = tone;
    const double rms = std::sqrt(tone.matrix.diagonal().cwiseAbs2().mean());
    if (rms > 0.0) out.matrix /= rms;
    return out;
}

void save_channel_csv(const std::filesystem::path& path, const std::vector<ToneChannel>& tones) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << "tone,l,m,re,im\n";
    char buf[160];
    for (const auto& t : tones) {
        for (int l = 0; l < t.lines(); ++l) {
            for (int m = 0; m < t.lines(); ++m) {
                const Complex v = t.matrix(l, m);
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g\n", t.tone_index, l + 1, m + 1, v.real(),
                              v.imag());
                os << buf;
            }
        }
    }
}

std::vector<ToneChannel> load_channel_csv(const std::filesystem::path& path, const std::optional<ToneGrid>& grid) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open channel file " + path.string());
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty channel file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "tone,l,m,re,im") throw ParseError("unexpected channel CSV header '" + line + "'");

    std::map<std::tuple<int, int, int>, Complex> entries;
    int lines = 0;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field[5];
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(ls, field[i], i < 4 ? ',' : '\n'))
                throw ParseError("row " + std::to_string(row) + ": expected 5 fields");
        }
        int tone = 0, l = 0, m = 0;
        double re = 0.0, im = 0.0;
        try {
            tone = std::stoi(field[0]);
            l = std::stoi(field[1]);
            m = std::stoi(field[2]);
            re = std::stod(field[3]);
            im = std::stod(field[4]);
        } catch (const std::exception&) {
            throw ParseError("row " + std::to_string(row) + ": malformed number");
        }
        const std::string where = "(tone " + std::to_string(tone) + ", " + std::to_string(l) + ", " +
                                  std::to_string(m) + ")";
        if (tone < 0 || l < 1 || m < 1) throw ParseError("invalid index " + where);
        if (!std::isfinite(re) || !std::isfinite(im)) throw ParseError("non-finite value at " + where);
        if (!entries.emplace(std::make_tuple(tone, l, m), Complex(re, im)).second)
            throw ParseError("duplicate entry " + where);
        lines = std::max({lines, l, m});
    }
    if (entries.empty()) throw ParseError("channel file has no rows");

    std::map<int, ToneChannel> by_tone;
    for (const auto& [key, value] : entries) {
        const int tone = std::get<0>(key);
        auto& t = by_tone[tone];
        if (t.matrix.size() == 0) {
            t.tone_index = tone;
            t.center_freq_hz = grid ? grid->center_freq_hz(tone) : std::numeric_limits<double>::quiet_NaN();
            t.matrix = CMatrix::Constant(lines, lines, Complex(std::numeric_limits<double>::quiet_NaN(), 0.0));
        }
        t.matrix(std::get<1>(key) - 1, std::get<2>(key) - 1) = value;
    }
    std::vector<ToneChannel> out;
    for (auto& [tone, t] : by_tone) {
        for (int l = 1; l <= lines; ++l)
            for (int m = 1; m <= lines; ++m)
                if (!entries.contains({tone, l, m}))
                    throw ParseError("missing entry (tone " + std::to_string(tone) + ", " + std::to_string(l) +
                                     ", " + std::to_string(m) + ")");
        out.push_back(std::move(t));
    }
    return out;
}

CVector complex_gaussian(int n, double variance, Rng& rng) {
    CVector v(n);
    const double s = std::sqrt(variance / 2.0);
    for (int i = 0; i < n; ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        v[i] = {s * re, s * im};
    }
    return v;
}

CVector apply_channel(const CMatrix& h, const CVector& x, double sigma_w2,
                      const std::optional<ImpulseNoiseConfig>& impulse, bool infected, Rng& rng) {
    if (sigma_w2 < 0.0) throw UsageError("noise variance must be non-negative");
    CVector y = h * x;
    if (sigma_w2 > 0.0) y += complex_gaussian(static_cast<int>(y.size()), sigma_w2, rng);
    if (impulse && infected) y += complex_gaussian(static_cast<int>(y.size()), impulse->sigma_u2(sigma_w2), rng);
    return y;
}

std::vector<bool> draw_impulse_flags(double kappa, int num_symbols, Rng& rng) {
    std::vector<bool> flags(num_symbols);
    for (int s = 0; s < num_symbols; ++s) flags[s] = rng.uniform() < kappa;
    return flags;
}

double noise_enhancement(const CMatrix& h) {
    const int l = static_cast<int>(h.rows());
    Eigen::JacobiSVD<CMatrix> svd(h);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv[sv.size() - 1] > 1e-13 * sv[0]))
        throw SingularMatrixError("channel matrix is singular; ZF noise enhancement undefined");
    double tr = 0.0;
    for (int i = 0; i < sv.size(); ++i) tr += 1.0 / (sv[i] * sv[i]);
    return tr / l;
}

} // namespace gfast

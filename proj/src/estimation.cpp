#include "gfast/estimation.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace gfast {

CMatrix make_dft_pilots(int lines, int pilot_symbols, double symbol_energy) {
    if (pilot_symbols < lines)
        throw ConfigError("need at least " + std::to_string(lines) + " pilot symbols, got " +
                          std::to_string(pilot_symbols));
    CMatrix p(lines, pilot_symbols);
    const double amp = std::sqrt(symbol_energy);
    for (int l = 0; l < lines; ++l)
        for (int s = 0; s < pilot_symbols; ++s)
            p(l, s) = std::polar(amp, -2.0 * std::numbers::pi * l * s / pilot_symbols);
    return p;
}

double cf_ce(const CMatrix& h, const CMatrix& x_blk, const CMatrix& y_blk) {
    return (y_blk - h * x_blk).squaredNorm();
}

CeStatistics::CeStatistics(const CMatrix& x_blk, const CMatrix& y_blk)
    : rxx_(x_blk * x_blk.adjoint()), ryx_(y_blk * x_blk.adjoint()), yy_(y_blk.squaredNorm()) {}

double CeStatistics::cost(const CMatrix& h) const {
    const Complex cross = (h.adjoint() * ryx_).trace();
    const Complex quad = (h * rxx_ * h.adjoint()).trace();
    return yy_ - 2.0 * cross.real() + quad.real();
}

double CeStatistics::cost_packed(std::span<const double> packed) const {
    const int n = lines();
    const std::size_t off = static_cast<std::size_t>(n) * n;
    auto at = [&](int l, int m) {
        const std::size_t i = static_cast<std::size_t>(m) * n + l;
        return Complex(packed[i], packed[off + i]);
    };
    double cross = 0.0;
    double quad = 0.0;
    Complex row[64];
    for (int l = 0; l < n; ++l) {
        for (int m = 0; m < n; ++m) {
            row[m] = at(l, m);
            cross += (std::conj(row[m]) * ryx_(l, m)).real();
        }
        for (int a = 0; a < n; ++a) {
            Complex acc = 0.0;
            for (int b = 0; b < n; ++b) acc += rxx_(a, b) * std::conj(row[b]);
            quad += (row[a] * acc).real();
        }
    }
    return yy_ - 2.0 * cross + quad;
}

std::vector<double> pack_channel(const CMatrix& h) {
    const auto n = static_cast<std::size_t>(h.rows());
    std::vector<double> packed(2 * n * n);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t l = 0; l < n; ++l) {
            packed[m * n + l] = h(l, m).real();
            packed[n * n + m * n + l] = h(l, m).imag();
        }
    return packed;
}

CMatrix unpack_channel(std::span<const double> packed, int lines) {
    const auto n = static_cast<std::size_t>(lines);
    CMatrix h(lines, lines);
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t l = 0; l < n; ++l) h(l, m) = {packed[m * n + l], packed[n * n + m * n + l]};
    return h;
}

ChannelEstimate ls_estimate(const CMatrix& x_blk, const CMatrix& y_blk) {
    const auto lines = x_blk.rows();
    if (x_blk.cols() < lines)
        throw IdentifiabilityError("LS estimation needs at least " + std::to_string(lines) + " symbols, got " +
                                   std::to_string(x_blk.cols()));
    const CMatrix rxx = x_blk * x_blk.adjoint();
    Eigen::FullPivLU<CMatrix> lu(rxx);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) throw IdentifiabilityError("training block is rank deficient");
    ChannelEstimate est;
    // H = R_yx R_xx^-1, solved as R_xx^H H^H = R_yx^H with R_xx Hermitian.
    est.matrix = lu.solve((y_blk * x_blk.adjoint()).adjoint()).adjoint();
    est.cf = cf_ce(est.matrix, x_blk, y_blk);
    return est;
}

ChannelEstimate dea_ce(const CMatrix& x_blk, const CMatrix& y_blk, const de::DeParams& params, std::uint64_t seed,
                       const CeObserver& observer) {
    const int lines = static_cast<int>(x_blk.rows());
    if (x_blk.cols() < lines)
        throw IdentifiabilityError("channel estimation needs at least " + std::to_string(lines) + " symbols");
    const CeStatistics stats(x_blk, y_blk);
    auto objective = [&stats](std::span<const double> packed) { return stats.cost_packed(packed); };
    de::RealObserver obs;
    if (observer) {
        obs = [&](int g, std::span<const double> best, double cf) { observer(g, unpack_channel(best, lines), cf); };
    }
    const auto res = de::run(objective, 2 * lines * lines, params, seed, obs);
    ChannelEstimate est;
    est.matrix = unpack_channel(res.best, lines);
    est.cf = res.best_cf;
    est.eval_count = res.eval_count;
    est.generations = res.generations;
    return est;
}

double crlb(int symbols, double symbol_energy, double sigma2) {
    if (symbols <= 0 || !(symbol_energy > 0.0) || !(sigma2 > 0.0))
        throw UsageError("CRLB arguments must be positive");
    return 2.0 * sigma2 / (symbols * symbol_energy);
}

double ncrlb(int symbols, double symbol_energy, double sigma2, double row_norm2) {
    if (!(row_norm2 > 0.0)) throw UsageError("NCRLB needs a positive row norm");
    return crlb(symbols, symbol_energy, sigma2) / row_norm2;
}

double frame_ncrlb(const CMatrix& h_true, int symbols, double symbol_energy, double sigma_w2) {
    const auto lines = static_cast<double>(h_true.rows());
    double weighted = 0.0;
    double weight = 0.0;
    for (int l = 0; l < h_true.rows(); ++l) {
        const double row2 = h_true.row(l).squaredNorm();
        weighted += row2 * lines * ncrlb(symbols, symbol_energy, sigma_w2 / 2.0, row2);
        weight += row2;
    }
    return weighted / weight;
}

double nmse(const CMatrix& h_hat, const CMatrix& h_true) {
    if (h_hat.rows() != h_true.rows() || h_hat.cols() != h_true.cols()) throw UsageError("NMSE shape mismatch");
    const double ref = h_true.squaredNorm();
    if (!(ref > 0.0)) throw UsageError("NMSE reference channel has zero norm");
    return (h_hat - h_true).squaredNorm() / ref;
}

} // namespace gfast

#include "gfast/modem.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gfast {

namespace {

bool is_power_of_four(int m) {
    if (m < 4) return false;
    while (m % 4 == 0) m /= 4;
    return m == 1;
}

} // namespace

Constellation Constellation::qam(int order) {
    if (!is_power_of_four(order) || order > 4096)
        throw ConfigError("QAM order must be a power of 4 between 4 and 4096, got " + std::to_string(order));
    Constellation c;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    int bits = 0;
    while ((1 << bits) < order) ++bits;
    c.bits_ = bits;
    const int half = bits / 2;
    const double scale = std::sqrt(3.0 / (2.0 * (order - 1)));

    c.points_.resize(order);
    c.labels_.resize(order);
    c.by_label_.resize(order);
    double energy = 0.0;
    for (int i = 0; i < side; ++i) {
        for (int q = 0; q < side; ++q) {
            const int m = i * side + q;
            const double re = (side - 1 - 2 * i) * scale;
            const double im = (side - 1 - 2 * q) * scale;
            c.points_[m] = {re, im};
            const auto gi = static_cast<std::uint32_t>(i ^ (i >> 1));
            const auto gq = static_cast<std::uint32_t>(q ^ (q >> 1));
            c.labels_[m] = (gi << half) | gq;
            c.by_label_[c.labels_[m]] = m;
            energy += std::norm(c.points_[m]);
        }
    }
    c.energy_ = energy / order;
    return c;
}

std::uint32_t pack_label(std::span<const std::uint8_t> bits) {
    std::uint32_t v = 0;
    for (auto b : bits) v = (v << 1) | (b & 1U);
    return v;
}

void unpack_label(std::uint32_t label, int bits_per_symbol, std::span<std::uint8_t> out) {
    for (int j = 0; j < bits_per_symbol; ++j)
        out[j] = static_cast<std::uint8_t>((label >> (bits_per_symbol - 1 - j)) & 1U);
}

Complex map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
    if (static_cast<int>(bits.size()) != c.bits_per_symbol())
        throw UsageError("map_bits expects " + std::to_string(c.bits_per_symbol()) + " bits, got " +
                         std::to_string(bits.size()));
    return c.point_for_label(pack_label(bits));
}

int nearest_index(Complex y, const Constellation& c) {
    const auto pts = c.points();
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int m = 0; m < static_cast<int>(pts.size()); ++m) {
        const double d = std::norm(y - pts[m]);
        if (d < best_d) {
            best_d = d;
            best = m;
        }
    }
    return best;
}

Bits slice_hard(Complex y, const Constellation& c) {
    Bits out(c.bits_per_symbol());
    unpack_label(c.labels()[nearest_index(y, c)], c.bits_per_symbol(), out);
    return out;
}

void demap_soft(Complex y_eff, Complex gain, double sigma_eff2, std::span<const double> prior,
                const Constellation& c, std::span<double> out) {
    if (!(sigma_eff2 > 0.0)) throw UsageError("demap_soft needs sigma_eff2 > 0");
    const int k = c.bits_per_symbol();
    const int m_count = c.order();
    const auto pts = c.points();
    const bool use_prior = !prior.empty();

    constexpr double inf = std::numeric_limits<double>::infinity();
    double best0[12], best1[12];
    for (int j = 0; j < k; ++j) best0[j] = best1[j] = inf;

    for (int m = 0; m < m_count; ++m) {
        const double dist = std::norm(y_eff - gain * pts[m]) / sigma_eff2;
        double prior_sum = 0.0;
        if (use_prior) {
            for (int j = 0; j < k; ++j) prior_sum += (c.bit(m, j) ? -0.5 : 0.5) * prior[j];
        }
        for (int j = 0; j < k; ++j) {
            const std::uint8_t b = c.bit(m, j);
            double metric = dist - prior_sum;
            if (use_prior) metric += (b ? -0.5 : 0.5) * prior[j];
            if (b) {
                if (metric < best1[j]) best1[j] = metric;
            } else if (metric < best0[j]) {
                best0[j] = metric;
            }
        }
    }
    for (int j = 0; j < k; ++j) out[j] = clamp_llr(best1[j] - best0[j]);
}

std::vector<double> demap_soft(Complex y_eff, Complex gain, double sigma_eff2, std::span<const double> prior,
                               const Constellation& c) {
    std::vector<double> out(c.bits_per_symbol());
    demap_soft(y_eff, gain, sigma_eff2, prior, c, out);
    return out;
}

} // namespace gfast

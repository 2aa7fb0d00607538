#pragma once

#include "gfast/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gfast {

// Square Gray-labeled M-QAM with unit average energy.
//
// Point m sits at (a(m / sqrtM), a(m % sqrtM)) with per-axis amplitude
// a(i) = (sqrtM - 1 - 2i) * scale, i.e. index 0 is the top-right corner and
// indices run downward. Its label is gray(iI) << (k/2) | gray(iQ), read MSB
// first, so the first half of the bits selects the in-phase level. For QPSK
// this makes 00 -> (1+j)/sqrt2, 01 -> (1-j)/sqrt2, 10 -> (-1+j)/sqrt2,
// 11 -> (-1-j)/sqrt2.
class Constellation {
public:
    static Constellation qam(int order);

    int order() const { return static_cast<int>(points_.size()); }
    int bits_per_symbol() const { return bits_; }
    double energy() const { return energy_; }

    std::span<const Complex> points() const { return points_; }
    std::span<const std::uint32_t> labels() const { return labels_; }
    // Point index carrying the given label.
    int index_of_label(std::uint32_t label) const { return by_label_[label]; }
    Complex point_for_label(std::uint32_t label) const { return points_[by_label_[label]]; }

    // Bit j (MSB first) of point m's label.
    std::uint8_t bit(int m, int j) const {
        return static_cast<std::uint8_t>((labels_[m] >> (bits_ - 1 - j)) & 1U);
    }

private:
    std::vector<Complex> points_;
    std::vector<std::uint32_t> labels_;
    std::vector<int> by_label_;
    int bits_ = 0;
    double energy_ = 0.0;
};

std::uint32_t pack_label(std::span<const std::uint8_t> bits);
void unpack_label(std::uint32_t label, int bits_per_symbol, std::span<std::uint8_t> out);

Complex map_bits(std::span<const std::uint8_t> bits, const Constellation& c);

// Index of the nearest point, ties to the lowest index.
int nearest_index(Complex y, const Constellation& c);

Bits slice_hard(Complex y, const Constellation& c);

// Max-log LLRs (positive favours bit 0) for y_eff = gain * x + n, n ~ CN(0, sigma_eff2).
// prior holds a-priori LLRs of the symbol's bits; bit k's own prior is left out of its output.
void demap_soft(Complex y_eff, Complex gain, double sigma_eff2, std::span<const double> prior,
                const Constellation& c, std::span<double> out);

std::vector<double> demap_soft(Complex y_eff, Complex gain, double sigma_eff2, std::span<const double> prior,
                               const Constellation& c);

} // namespace gfast

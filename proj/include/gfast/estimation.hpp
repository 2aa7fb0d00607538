#pragma once

#include "gfast/de_continuous.hpp"
#include "gfast/types.hpp"

namespace gfast {

// L x S_p pilot matrix from the first L rows of an S_p-point DFT, scaled so that
// P P^H = S_p * E_s * I_L.
CMatrix make_dft_pilots(int lines, int pilot_symbols, double symbol_energy = 1.0);

// sum_s ||Y[s] - H X[s]||^2 with symbols stored as columns of x_blk / y_blk.
double cf_ce(const CMatrix& h, const CMatrix& x_blk, const CMatrix& y_blk);

// Second-order statistics of a block; evaluates cf_ce in O(L^3) independent of S:
//   ||Y||^2 - 2 Re tr(H^H R_yx) + Re tr(H R_xx H^H).
class CeStatistics {
public:
    CeStatistics(const CMatrix& x_blk, const CMatrix& y_blk);

    int lines() const { return static_cast<int>(rxx_.rows()); }
    double cost(const CMatrix& h) const;
    // Cost of the channel packed as [Re vec(H); Im vec(H)], vec stacking columns.
    double cost_packed(std::span<const double> packed) const;

    const CMatrix& rxx() const { return rxx_; }
    const CMatrix& ryx() const { return ryx_; }

private:
    CMatrix rxx_;
    CMatrix ryx_;
    double yy_ = 0.0;
};

std::vector<double> pack_channel(const CMatrix& h);
CMatrix unpack_channel(std::span<const double> packed, int lines);

struct ChannelEstimate {
    CMatrix matrix;
    double cf = 0.0;
    std::int64_t eval_count = 0;
    int generations = 0;
};

// H = Y X^H (X X^H)^-1. Throws IdentifiabilityError when X X^H is rank deficient.
ChannelEstimate ls_estimate(const CMatrix& x_blk, const CMatrix& y_blk);

using CeObserver = std::function<void(int generation, const CMatrix& best, double best_cf)>;

ChannelEstimate dea_ce(const CMatrix& x_blk, const CMatrix& y_blk, const de::DeParams& params, std::uint64_t seed,
                       const CeObserver& observer = {});

// Cramer-Rao bound of one channel row in closed form, 2 sigma^2 / (S E_s).
double crlb(int symbols, double symbol_energy, double sigma2);

// Normalized bound 2 sigma^2 / (S E_s ||H_row||^2).
double ncrlb(int symbols, double symbol_energy, double sigma2, double row_norm2);

// Bound on the Frobenius NMSE for CN(0, sigma_w2) noise: the per-entry bound of
// ncrlb (with sigma^2 the per-real-dimension variance sigma_w2 / 2) times the L
// entries of a row, averaged over rows with weights ||H_row||^2. Equals the
// expected NMSE of LS on orthogonal training of length `symbols`.
double frame_ncrlb(const CMatrix& h_true, int symbols, double symbol_energy, double sigma_w2);

// ||H_hat - H||_F^2 / ||H||_F^2.
double nmse(const CMatrix& h_hat, const CMatrix& h_true);

} // namespace gfast

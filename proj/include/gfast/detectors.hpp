#pragma once

#include "gfast/de_discrete.hpp"
#include "gfast/modem.hpp"
#include "gfast/types.hpp"

#include <optional>
#include <string_view>

namespace gfast {

enum class Exec { serial, parallel };

enum class DetectorKind { sud, zf, ml, dea };

std::string_view detector_name(DetectorKind kind);
DetectorKind parse_detector(std::string_view name);

struct DetectionResult {
    CVector symbols;
    Bits bits; // user l's label occupies [l*k, (l+1)*k)
    double cf = 0.0;
    std::int64_t eval_count = 0;
    int generations = 0;
};

// ||Y - H X||^2
double cf_mud(const CVector& x, const CMatrix& h_hat, const CVector& y);

// Precomputed H[:,l] * point_m columns so that a label vector costs L vector adds.
class MudCost {
public:
    MudCost(const CMatrix& h_hat, const CVector& y, const Constellation& c);

    int lines() const { return lines_; }
    double operator()(std::span<const std::uint8_t> bits) const;
    double of_indices(std::span<const int> point_indices) const;

private:
    int lines_;
    int order_;
    int k_;
    const Constellation* c_;
    std::vector<Complex> y_;
    std::vector<Complex> table_; // [(l * order + m) * lines + row]
    mutable std::vector<Complex> scratch_;
};

CVector symbols_from_bits(std::span<const std::uint8_t> bits, const Constellation& c, int lines);

DetectionResult sud_detect(const CVector& y, const CMatrix& h_hat, const Constellation& c);
DetectionResult zf_detect(const CVector& y, const CMatrix& h_hat, const Constellation& c);

inline constexpr std::int64_t kMlBudget = std::int64_t{1} << 24;

// Exhaustive search over all M^L candidates; ties go to the lexicographically smallest bit vector.
DetectionResult ml_detect(const CVector& y, const CMatrix& h_hat, const Constellation& c,
                          Exec exec = Exec::serial);

using MudObserver = de::BitObserver;

DetectionResult dea_mud(const CVector& y, const CMatrix& h_hat, const Constellation& c, const de::DeParams& params,
                        std::uint64_t seed, const MudObserver& observer = {});

// Per-user scalar equivalent y_eff = x_l + n_l with n_l ~ CN(0, sigma2_l), the input to soft demapping.
struct EffectiveChannel {
    std::vector<Complex> y_eff;
    std::vector<double> sigma2;
};

// ML / DEA: interference of the other users cancelled with their detected symbols,
// matched filter on the remaining column.
EffectiveChannel cancelled_channel(const DetectionResult& result, const CMatrix& h_hat, const CVector& y,
                                   double sigma_w2);
// SUD: one-tap per line with the crosstalk power counted as noise.
EffectiveChannel sud_channel(const CVector& y, const CMatrix& h_hat, double sigma_w2, double symbol_energy);
// ZF: H^-1 Y with the enhanced per-line noise sigma_w2 [(H^H H)^-1]_ll.
EffectiveChannel zf_channel(const CVector& y, const CMatrix& h_hat, double sigma_w2);

struct SoftOutput {
    std::vector<double> m_po;
    std::vector<double> m_e;
};

void soft_from_effective(const EffectiveChannel& eff, std::span<const double> priors, const Constellation& c,
                         std::span<double> m_po, std::span<double> m_e);

// A-posteriori bit LLRs around the hard solution (positive favours 0) and m_e = m_po - m_pr.
SoftOutput extract_soft(const DetectionResult& result, const CMatrix& h_hat, const CVector& y, double sigma_w2,
                        std::span<const double> priors, const Constellation& c);

} // namespace gfast

#include "gfast/detectors.hpp"

#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gfast {

std::string_view detector_name(DetectorKind kind) {
    switch (kind) {
    case DetectorKind::sud: return "sud";
    case DetectorKind::zf: return "zf";
    case DetectorKind::ml: return "ml";
    case DetectorKind::dea: return "dea";
    }
    return "?";
}

DetectorKind parse_detector(std::string_view name) {
    if (name == "sud") return DetectorKind::sud;
    if (name == "zf") return DetectorKind::zf;
    if (name == "ml") return DetectorKind::ml;
    if (name == "dea") return DetectorKind::dea;
    throw ConfigError("unknown detector '" + std::string(name) + "'");
}

double cf_mud(const CVector& x, const CMatrix& h_hat, const CVector& y) { return (y - h_hat * x).squaredNorm(); }

MudCost::MudCost(const CMatrix& h_hat, const CVector& y, const Constellation& c)
    : lines_(static_cast<int>(h_hat.rows())), order_(c.order()), k_(c.bits_per_symbol()), c_(&c),
      y_(y.data(), y.data() + y.size()), table_(static_cast<std::size_t>(lines_) * order_ * lines_),
      scratch_(lines_) {
    const auto pts = c.points();
    for (int l = 0; l < lines_; ++l)
        for (int m = 0; m < order_; ++m)
            for (int r = 0; r < lines_; ++r)
                table_[(static_cast<std::size_t>(l) * order_ + m) * lines_ + r] = h_hat(r, l) * pts[m];
}

double MudCost::of_indices(std::span<const int> idx) const {
    for (int r = 0; r < lines_; ++r) scratch_[r] = y_[r];
    for (int l = 0; l < lines_; ++l) {
        const Complex* col = &table_[(static_cast<std::size_t>(l) * order_ + idx[l]) * lines_];
        for (int r = 0; r < lines_; ++r) scratch_[r] -= col[r];
    }
    double s = 0.0;
    for (int r = 0; r < lines_; ++r) s += std::norm(scratch_[r]);
    return s;
}

double MudCost::operator()(std::span<const std::uint8_t> bits) const {
    int idx[64];
    for (int l = 0; l < lines_; ++l) idx[l] = c_->index_of_label(pack_label(bits.subspan(l * k_, k_)));
    return of_indices({idx, static_cast<std::size_t>(lines_)});
}

CVector symbols_from_bits(std::span<const std::uint8_t> bits, const Constellation& c, int lines) {
    const int k = c.bits_per_symbol();
    CVector x(lines);
    for (int l = 0; l < lines; ++l) x[l] = map_bits(bits.subspan(l * k, k), c);
    return x;
}

namespace {

DetectionResult from_indices(const std::vector<int>& idx, const CMatrix& h_hat, const CVector& y,
                             const Constellation& c) {
    const int lines = static_cast<int>(idx.size());
    const int k = c.bits_per_symbol();
    DetectionResult r;
    r.symbols.resize(lines);
    r.bits.resize(static_cast<std::size_t>(lines) * k);
    for (int l = 0; l < lines; ++l) {
        r.symbols[l] = c.points()[idx[l]];
        unpack_label(c.labels()[idx[l]], k, std::span(r.bits).subspan(l * k, k));
    }
    r.cf = cf_mud(r.symbols, h_hat, y);
    return r;
}

CMatrix checked_inverse(const CMatrix& h) {
    Eigen::FullPivLU<CMatrix> lu(h);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw SingularMatrixError("channel estimate is singular; ZF undefined");
    return lu.inverse();
}

} // namespace

DetectionResult sud_detect(const CVector& y, const CMatrix& h_hat, const Constellation& c) {
    const int lines = static_cast<int>(h_hat.rows());
    std::vector<int> idx(lines);
    for (int l = 0; l < lines; ++l) {
        if (h_hat(l, l) == Complex(0.0, 0.0))
            throw SingularMatrixError("direct path of line " + std::to_string(l + 1) + " is zero");
        idx[l] = nearest_index(y[l] / h_hat(l, l), c);
    }
    return from_indices(idx, h_hat, y, c);
}

DetectionResult zf_detect(const CVector& y, const CMatrix& h_hat, const Constellation& c) {
    const CVector z = checked_inverse(h_hat) * y;
    std::vector<int> idx(z.size());
    for (int l = 0; l < z.size(); ++l) idx[l] = nearest_index(z[l], c);
    return from_indices(idx, h_hat, y, c);
}

namespace {

struct MlBest {
    double cf = std::numeric_limits<double>::infinity();
    std::vector<int> labels;
};

// Enumerates users [depth, L) in label order on top of the residual r = Y - sum of fixed users.
// The last user is scored as ||r||^2 - 2 Re(conj(x) h^H r) + |x|^2 ||h||^2, the exact CF of the full candidate.
void ml_recurse(int depth, const std::vector<Complex>& r, const CMatrix& h, const Constellation& c,
                std::vector<int>& labels, MlBest& best) {
    const int lines = static_cast<int>(h.rows());
    const int order = c.order();
    if (depth == lines - 1) {
        double rr = 0.0;
        Complex hr = 0.0;
        double hh = 0.0;
        for (int i = 0; i < lines; ++i) {
            rr += std::norm(r[i]);
            hr += std::conj(h(i, depth)) * r[i];
            hh += std::norm(h(i, depth));
        }
        for (int lab = 0; lab < order; ++lab) {
            const Complex x = c.point_for_label(static_cast<std::uint32_t>(lab));
            const double cf = rr - 2.0 * (std::conj(x) * hr).real() + std::norm(x) * hh;
            if (cf < best.cf) {
                best.cf = cf;
                labels[depth] = lab;
                best.labels = labels;
            }
        }
        return;
    }
    std::vector<Complex> next(lines);
    for (int lab = 0; lab < order; ++lab) {
        const Complex x = c.point_for_label(static_cast<std::uint32_t>(lab));
        for (int i = 0; i < lines; ++i) next[i] = r[i] - h(i, depth) * x;
        labels[depth] = lab;
        ml_recurse(depth + 1, next, h, c, labels, best);
    }
}

} // namespace

DetectionResult ml_detect(const CVector& y, const CMatrix& h_hat, const Constellation& c, Exec exec) {
    const int lines = static_cast<int>(h_hat.rows());
    const int order = c.order();
    const double space = std::pow(static_cast<double>(order), lines);
    if (space > static_cast<double>(kMlBudget))
        throw BudgetError("ML search space M^L = " + std::to_string(space) + " exceeds budget 2^24");

    std::vector<MlBest> per_first(order);
    const std::vector<Complex> y0(y.data(), y.data() + y.size());
    auto branch = [&](int lab) {
        std::vector<int> labels(lines, 0);
        labels[0] = lab;
        if (lines == 1) {
            const Complex x = c.point_for_label(static_cast<std::uint32_t>(lab));
            per_first[lab].cf = std::norm(y0[0] - h_hat(0, 0) * x);
            per_first[lab].labels = labels;
            return;
        }
        std::vector<Complex> r(lines);
        const Complex x = c.point_for_label(static_cast<std::uint32_t>(lab));
        for (int i = 0; i < lines; ++i) r[i] = y0[i] - h_hat(i, 0) * x;
        ml_recurse(1, r, h_hat, c, labels, per_first[lab]);
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int lab = 0; lab < order; ++lab) branch(lab);
    } else {
        for (int lab = 0; lab < order; ++lab) branch(lab);
    }

    // Branches are already in lexicographic order, so strict < keeps the smallest label vector on ties.
    int winner = 0;
    for (int lab = 1; lab < order; ++lab)
        if (per_first[lab].cf < per_first[winner].cf) winner = lab;

    std::vector<int> idx(lines);
    for (int l = 0; l < lines; ++l)
        idx[l] = c.index_of_label(static_cast<std::uint32_t>(per_first[winner].labels[l]));
    DetectionResult r = from_indices(idx, h_hat, y, c);
    r.eval_count = static_cast<std::int64_t>(std::llround(space));
    return r;
}

DetectionResult dea_mud(const CVector& y, const CMatrix& h_hat, const Constellation& c, const de::DeParams& params,
                        std::uint64_t seed, const MudObserver& observer) {
    const int lines = static_cast<int>(h_hat.rows());
    const MudCost cost(h_hat, y, c);
    auto objective = [&cost](std::span<const std::uint8_t> bits) { return cost(bits); };
    const auto res = de::run_bits(objective, lines * c.bits_per_symbol(), params, seed, observer);
    DetectionResult r;
    r.bits = res.best;
    r.symbols = symbols_from_bits(r.bits, c, lines);
    r.cf = res.best_cf;
    r.eval_count = res.eval_count;
    r.generations = res.generations;
    return r;
}

EffectiveChannel cancelled_channel(const DetectionResult& result, const CMatrix& h_hat, const CVector& y,
                                   double sigma_w2) {
    const int lines = static_cast<int>(h_hat.rows());
    EffectiveChannel eff;
    eff.y_eff.resize(lines);
    eff.sigma2.resize(lines);
    const CVector full = h_hat * result.symbols;
    for (int l = 0; l < lines; ++l) {
        const CVector r = y - full + h_hat.col(l) * result.symbols[l];
        const double hh = h_hat.col(l).squaredNorm();
        eff.y_eff[l] = h_hat.col(l).dot(r) / hh;
        eff.sigma2[l] = sigma_w2 / hh;
    }
    return eff;
}

EffectiveChannel sud_channel(const CVector& y, const CMatrix& h_hat, double sigma_w2, double symbol_energy) {
    const int lines = static_cast<int>(h_hat.rows());
    EffectiveChannel eff;
    eff.y_eff.resize(lines);
    eff.sigma2.resize(lines);
    for (int l = 0; l < lines; ++l) {
        const Complex d = h_hat(l, l);
        if (d == Complex(0.0, 0.0))
            throw SingularMatrixError("direct path of line " + std::to_string(l + 1) + " is zero");
        const double xtalk = h_hat.row(l).squaredNorm() - std::norm(d);
        eff.y_eff[l] = y[l] / d;
        eff.sigma2[l] = (sigma_w2 + xtalk * symbol_energy) / std::norm(d);
    }
    return eff;
}

EffectiveChannel zf_channel(const CVector& y, const CMatrix& h_hat, double sigma_w2) {
    const CMatrix inv = checked_inverse(h_hat);
    const CVector z = inv * y;
    EffectiveChannel eff;
    eff.y_eff.assign(z.data(), z.data() + z.size());
    eff.sigma2.resize(z.size());
    for (int l = 0; l < z.size(); ++l) eff.sigma2[l] = sigma_w2 * inv.row(l).squaredNorm();
    return eff;
}

void soft_from_effective(const EffectiveChannel& eff, std::span<const double> priors, const Constellation& c,
                         std::span<double> m_po, std::span<double> m_e) {
    const int k = c.bits_per_symbol();
    const int lines = static_cast<int>(eff.y_eff.size());
    double ext[12];
    for (int l = 0; l < lines; ++l) {
        const auto pr = priors.empty() ? std::span<const double>{} : priors.subspan(l * k, k);
        // Small floor keeps the demapper defined when the noise variance is zero.
        const double s2 = std::max(eff.sigma2[l], 1e-300);
        demap_soft(eff.y_eff[l], Complex(1.0, 0.0), s2, pr, c, {ext, static_cast<std::size_t>(k)});
        for (int j = 0; j < k; ++j) {
            const double prior = pr.empty() ? 0.0 : pr[j];
            m_po[l * k + j] = clamp_llr(ext[j] + prior);
            m_e[l * k + j] = m_po[l * k + j] - prior;
        }
    }
}

SoftOutput extract_soft(const DetectionResult& result, const CMatrix& h_hat, const CVector& y, double sigma_w2,
                        std::span<const double> priors, const Constellation& c) {
    const auto eff = cancelled_channel(result, h_hat, y, sigma_w2);
    SoftOutput out;
    const std::size_t n = static_cast<std::size_t>(h_hat.rows()) * c.bits_per_symbol();
    out.m_po.resize(n);
    out.m_e.resize(n);
    soft_from_effective(eff, priors, c, out.m_po, out.m_e);
    return out;
}

} // namespace gfast

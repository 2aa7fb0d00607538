#include "gfast/de_common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace gfast::de {

int DeParams::archive_size() const {
    return static_cast<int>(std::lround(greedy * population_size));
}

void DeParams::validate() const {
    if (population_size < 4)
        throw ConfigError("population size must be >= 4, got " + std::to_string(population_size));
    if (!(greedy > 0.0 && greedy < 1.0)) throw ConfigError("greedy factor must lie in (0,1)");
    if (archive_size() < 1) throw ConfigError("greedy factor * population size rounds to an empty archive");
    if (!(adapt_rate > 0.0 && adapt_rate <= 1.0)) throw ConfigError("adaptive factor c must lie in (0,1]");
    if (sigma_lambda < 0.0 || sigma_cr < 0.0) throw ConfigError("scale parameters must be non-negative");
    if (max_generations < 1) throw ConfigError("max generations must be >= 1");
    if (stall_generations < 1) throw ConfigError("stall window must be >= 1");
    if (!(init_upper > init_lower)) throw ConfigError("initialization box is empty");
}

DeParams channel_estimation_defaults() {
    DeParams p;
    p.adapt_rate = 0.1;
    return p;
}

DeParams detection_defaults() {
    DeParams p;
    p.adapt_rate = 0.8;
    return p;
}

double sample_lambda(double mu_lambda, double sigma_lambda, Rng& rng) {
    if (sigma_lambda <= 0.0) {
        if (mu_lambda <= 0.0) throw UsageError("degenerate Cauchy with non-positive location never yields lambda > 0");
        return std::min(mu_lambda, 1.0);
    }
    for (;;) {
        const double u = rng.uniform();
        const double g = mu_lambda + sigma_lambda * std::tan(std::numbers::pi * (u - 0.5));
        if (g <= 0.0 || !std::isfinite(g)) continue;
        return std::min(g, 1.0);
    }
}

double sample_cr(double mu_cr, double sigma_cr, Rng& rng) {
    if (sigma_cr <= 0.0) {
        if (mu_cr < 0.0) throw UsageError("degenerate normal with negative mean never yields Cr >= 0");
        return std::min(mu_cr, 1.0);
    }
    for (;;) {
        const double g = mu_cr + sigma_cr * rng.normal();
        if (g < 0.0) continue;
        return std::min(g, 1.0);
    }
}

double arithmetic_mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double lehmer_mean(std::span<const double> xs) {
    double num = 0.0, den = 0.0;
    for (double x : xs) {
        num += x * x;
        den += x;
    }
    return den > 0.0 ? num / den : 0.0;
}

AdaptiveMeans adapt(AdaptiveMeans current, std::span<const double> successful_cr,
                    std::span<const double> successful_lambda, double c) {
    AdaptiveMeans next = current;
    if (!successful_cr.empty())
        next.mu_cr = (1.0 - c) * current.mu_cr + c * arithmetic_mean(successful_cr);
    if (!successful_lambda.empty())
        next.mu_lambda = (1.0 - c) * current.mu_lambda + c * lehmer_mean(successful_lambda);
    return next;
}

std::vector<int> best_indices(std::span<const double> cf, int k) {
    std::vector<int> idx(cf.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min<int>(k, static_cast<int>(idx.size()));
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        return cf[a] < cf[b] || (cf[a] == cf[b] && a < b);
    });
    idx.resize(k);
    return idx;
}

void draw_distinct_pair(int base, int population_size, Rng& rng, int& r2, int& r3) {
    // Sample from the population with `base` removed, then map back.
    const auto others = static_cast<std::uint64_t>(population_size - 1);
    int a = static_cast<int>(rng.below(others));
    int b = static_cast<int>(rng.below(others - 1));
    if (b >= a) ++b;
    r2 = a >= base ? a + 1 : a;
    r3 = b >= base ? b + 1 : b;
}

} // namespace gfast::de

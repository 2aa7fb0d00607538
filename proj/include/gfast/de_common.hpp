#pragma once

#include "gfast/rng.hpp"
#include "gfast/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gfast::de {

// Control parameters shared by the real-valued and binary optimizers.
struct DeParams {
    int population_size = 100;
    double greedy = 0.1;        // archive keeps round(greedy * population_size) best members
    double adapt_rate = 0.1;    // c in the mu updates
    double sigma_lambda = 0.1;
    double sigma_cr = 0.1;
    int max_generations = 100;
    int stall_generations = 20; // stop after this many generations without a best-CF drop
    double init_lower = -2.0;   // real-valued initialization box, per dimension
    double init_upper = 2.0;

    int archive_size() const;
    void validate() const;
};

// Table I defaults.
DeParams channel_estimation_defaults();
DeParams detection_defaults();

// Cauchy(mu, sigma) redrawn while <= 0, clipped to 1 from above.
double sample_lambda(double mu_lambda, double sigma_lambda, Rng& rng);

// Normal(mu, sigma) redrawn while < 0, clipped to 1 from above.
double sample_cr(double mu_cr, double sigma_cr, Rng& rng);

double arithmetic_mean(std::span<const double> xs);
double lehmer_mean(std::span<const double> xs);

struct AdaptiveMeans {
    double mu_cr = 0.5;
    double mu_lambda = 0.5;
};

// Location updates from the parameters of this generation's winning trials.
// An empty success set leaves its parameter untouched.
AdaptiveMeans adapt(AdaptiveMeans current, std::span<const double> successful_cr,
                    std::span<const double> successful_lambda, double c);

// Indices of the k lowest cf values; ties resolved by lower index.
std::vector<int> best_indices(std::span<const double> cf, int k);

// Draws r2 != r3, both != base, uniformly from [0, population_size).
void draw_distinct_pair(int base, int population_size, Rng& rng, int& r2, int& r3);

// Substream for individual `member` in generation `generation`.
inline Rng member_stream(std::uint64_t seed, int generation, int member) {
    return Rng(derive_seed(seed, {static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(member)}));
}

// Outcome shared by both optimizers.
template <typename Genome>
struct RunResult {
    Genome best;
    double best_cf = 0.0;
    int generations = 0;
    std::int64_t eval_count = 0;
    std::vector<double> best_cf_trace; // entry g = best CF after generation g (entry 0 = initial)
    AdaptiveMeans final_means;
};

} // namespace gfast::de

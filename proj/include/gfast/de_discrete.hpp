#pragma once

#include "gfast/de_common.hpp"

#include <functional>
#include <span>
#include <vector>

namespace gfast::de {

using BitGenome = std::vector<std::uint8_t>;
using BitObjective = std::function<double(std::span<const std::uint8_t>)>;
using BitObserver = std::function<void(int generation, std::span<const std::uint8_t> best, double best_cf)>;

struct BitPopulation {
    int dim = 0;
    std::vector<std::uint8_t> members;
    std::vector<double> cf;
    std::vector<int> archive;
    AdaptiveMeans means;
    int generation = 0;
    std::int64_t eval_count = 0;

    int size() const { return static_cast<int>(cf.size()); }
    std::span<const std::uint8_t> member(int i) const {
        return {members.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<std::uint8_t> member(int i) {
        return {members.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
};

// mask_i = [z_i < lambda] with z_i ~ N(0,1), drawn as U_i < Phi(lambda).
void make_bit_mask(double lambda, Rng& rng, std::span<std::uint8_t> mask);

// Draws lambda by the Cauchy rule first, then the mask. Returns lambda.
double make_bit_mask(double mu_lambda, double sigma_lambda, Rng& rng, std::span<std::uint8_t> mask);

// donor = b ^ (z & (best ^ b)) ^ (z & (b_r2 ^ b_r3)), one mask shared by both terms.
void mutate_bits_with(std::span<const std::uint8_t> base, std::span<const std::uint8_t> archive_member,
                      std::span<const std::uint8_t> r2, std::span<const std::uint8_t> r3,
                      std::span<const std::uint8_t> mask, std::span<std::uint8_t> donor);

struct BitMutationDraw {
    int archive_pick = 0;
    int r2 = 0;
    int r3 = 0;
};

BitMutationDraw mutate_bits(int base, const BitPopulation& pop, std::span<const std::uint8_t> mask, Rng& rng,
                            std::span<std::uint8_t> donor);

int crossover_bits(std::span<const std::uint8_t> target, std::span<const std::uint8_t> donor, double cr, Rng& rng,
                   std::span<std::uint8_t> trial);

inline bool bit_trial_survives(double trial_cf, double target_cf) { return trial_cf <= target_cf; }

inline AdaptiveMeans adapt_bits(AdaptiveMeans current, std::span<const double> successful_cr,
                                std::span<const double> successful_lambda, double c) {
    return adapt(current, successful_cr, successful_lambda, c);
}

BitPopulation initialize_bits(const BitObjective& cf, int dim, const DeParams& params, std::uint64_t seed);

RunResult<BitGenome> run_bits(const BitObjective& cf, int dim, const DeParams& params, std::uint64_t seed,
                              const BitObserver& observer = {});

} // namespace gfast::de

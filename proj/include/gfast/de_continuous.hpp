#pragma once

#include "gfast/de_common.hpp"

#include <functional>
#include <span>
#include <vector>

namespace gfast::de {

using RealGenome = std::vector<double>;
using RealObjective = std::function<double(std::span<const double>)>;

// Called after every generation (0 = initial population) with the current best.
using RealObserver = std::function<void(int generation, std::span<const double> best, double best_cf)>;

// Row-major population: member i occupies [i*dim, (i+1)*dim).
struct ContinuousPopulation {
    int dim = 0;
    std::vector<double> members;
    std::vector<double> cf;
    std::vector<int> archive;
    AdaptiveMeans means;
    int generation = 0;
    std::int64_t eval_count = 0;

    int size() const { return static_cast<int>(cf.size()); }
    std::span<const double> member(int i) const {
        return {members.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<double> member(int i) {
        return {members.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
    }
};

// donor = x + lambda*(best - x) + lambda*(x_r2 - x_r3)
void mutate_with(std::span<const double> base, std::span<const double> archive_member, std::span<const double> r2,
                 std::span<const double> r3, double lambda, std::span<double> donor);

struct MutationDraw {
    int archive_pick = 0; // population index of the archive member used
    int r2 = 0;
    int r3 = 0;
};

// Draws r1 from the archive and r2 != r3 from the population minus `base`, then applies mutate_with.
MutationDraw mutate(int base, const ContinuousPopulation& pop, double lambda, Rng& rng, std::span<double> donor);

// trial[a] = donor[a] if U(0,1) <= cr else target[a]. Returns the number of donor-inherited entries.
int crossover(std::span<const double> target, std::span<const double> donor, double cr, Rng& rng,
              std::span<double> trial);

// Greedy one-to-one selection; ties go to the trial.
inline bool trial_survives(double trial_cf, double target_cf) { return trial_cf <= target_cf; }

ContinuousPopulation initialize(const RealObjective& cf, int dim, const DeParams& params, std::uint64_t seed);

RunResult<RealGenome> run(const RealObjective& cf, int dim, const DeParams& params, std::uint64_t seed,
                          const RealObserver& observer = {});

} // namespace gfast::de

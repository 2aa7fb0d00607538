#include "gfast/de_continuous.hpp"

#include <string>

namespace gfast::de {

void mutate_with(std::span<const double> base, std::span<const double> archive_member, std::span<const double> r2,
                 std::span<const double> r3, double lambda, std::span<double> donor) {
    const std::size_t d = base.size();
    for (std::size_t a = 0; a < d; ++a)
        donor[a] = base[a] + lambda * (archive_member[a] - base[a]) + lambda * (r2[a] - r3[a]);
}

MutationDraw mutate(int base, const ContinuousPopulation& pop, double lambda, Rng& rng, std::span<double> donor) {
    if (pop.size() < 4) throw ConfigError("mutation needs at least 4 members, got " + std::to_string(pop.size()));
    if (pop.archive.empty()) throw UsageError("mutation drawn from an empty archive");
    MutationDraw draw;
    draw.archive_pick = pop.archive[rng.below(pop.archive.size())];
    draw_distinct_pair(base, pop.size(), rng, draw.r2, draw.r3);
    mutate_with(pop.member(base), pop.member(draw.archive_pick), pop.member(draw.r2), pop.member(draw.r3), lambda,
                donor);
    return draw;
}

int crossover(std::span<const double> target, std::span<const double> donor, double cr, Rng& rng,
              std::span<double> trial) {
    int inherited = 0;
    for (std::size_t a = 0; a < target.size(); ++a) {
        if (rng.uniform() <= cr) {
            trial[a] = donor[a];
            ++inherited;
        } else {
            trial[a] = target[a];
        }
    }
    return inherited;
}

ContinuousPopulation initialize(const RealObjective& cf, int dim, const DeParams& params, std::uint64_t seed) {
    params.validate();
    if (dim < 1) throw ConfigError("problem dimension must be >= 1");
    ContinuousPopulation pop;
    pop.dim = dim;
    pop.members.resize(static_cast<std::size_t>(params.population_size) * dim);
    pop.cf.resize(params.population_size);
    const double span = params.init_upper - params.init_lower;
    for (int i = 0; i < params.population_size; ++i) {
        Rng rng = member_stream(seed, 0, i);
        auto x = pop.member(i);
        for (auto& v : x) v = params.init_lower + span * rng.uniform();
        pop.cf[i] = cf(x);
    }
    pop.eval_count = params.population_size;
    // Seeded from the initial population so the first mutation has an archive to draw from.
    pop.archive = best_indices(pop.cf, params.archive_size());
    return pop;
}

RunResult<RealGenome> run(const RealObjective& cf, int dim, const DeParams& params, std::uint64_t seed,
                          const RealObserver& observer) {
    ContinuousPopulation pop = initialize(cf, dim, params, seed);
    const int np = pop.size();

    RunResult<RealGenome> out;
    int best = pop.archive.front();
    double best_cf = pop.cf[best];
    out.best_cf_trace.push_back(best_cf);
    if (observer) observer(0, pop.member(best), best_cf);

    std::vector<double> trials(pop.members.size());
    std::vector<double> trial_cf(np);
    std::vector<double> lambdas(np), crs(np);
    std::vector<double> donor(dim);
    std::vector<double> s_cr, s_lambda;
    s_cr.reserve(np);
    s_lambda.reserve(np);

    int stall = 0;
    for (int g = 1; g <= params.max_generations; ++g) {
        for (int i = 0; i < np; ++i) {
            Rng rng = member_stream(seed, g, i);
            lambdas[i] = sample_lambda(pop.means.mu_lambda, params.sigma_lambda, rng);
            crs[i] = sample_cr(pop.means.mu_cr, params.sigma_cr, rng);
            mutate(i, pop, lambdas[i], rng, donor);
            std::span<double> trial{trials.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
            crossover(pop.member(i), donor, crs[i], rng, trial);
            trial_cf[i] = cf(trial);
        }
        pop.eval_count += np;

        s_cr.clear();
        s_lambda.clear();
        for (int i = 0; i < np; ++i) {
            if (!trial_survives(trial_cf[i], pop.cf[i])) continue;
            std::copy_n(trials.data() + static_cast<std::size_t>(i) * dim, dim, pop.member(i).begin());
            pop.cf[i] = trial_cf[i];
            s_cr.push_back(crs[i]);
            s_lambda.push_back(lambdas[i]);
        }
        pop.archive = best_indices(pop.cf, params.archive_size());
        pop.means = adapt(pop.means, s_cr, s_lambda, params.adapt_rate);
        pop.generation = g;

        best = pop.archive.front();
        if (pop.cf[best] < best_cf) {
            best_cf = pop.cf[best];
            stall = 0;
        } else {
            ++stall;
        }
        out.best_cf_trace.push_back(best_cf);
        if (observer) observer(g, pop.member(best), best_cf);
        if (stall >= params.stall_generations) break;
    }

    out.best.assign(pop.member(best).begin(), pop.member(best).end());
    out.best_cf = best_cf;
    out.generations = pop.generation;
    out.eval_count = pop.eval_count;
    out.final_means = pop.means;
    return out;
}

} // namespace gfast::de

#include "gfast/de_discrete.hpp"

#include <cmath>
#include <string>

namespace gfast::de {

namespace {

// Two 32-bit uniforms per 64-bit draw; bit loops need many and little resolution.
class HalfWordUniforms {
public:
    explicit HalfWordUniforms(Rng& rng) : rng_(rng) {}
    double operator()() {
        if (!have_) {
            word_ = rng_();
            have_ = true;
            return static_cast<double>(word_ >> 32) * 0x1.0p-32;
        }
        have_ = false;
        return static_cast<double>(word_ & 0xffffffffULL) * 0x1.0p-32;
    }

private:
    Rng& rng_;
    std::uint64_t word_ = 0;
    bool have_ = false;
};

} // namespace

void make_bit_mask(double lambda, Rng& rng, std::span<std::uint8_t> mask) {
    // z < lambda for z ~ N(0,1) is the event U < Phi(lambda).
    const double p = 0.5 * std::erfc(-lambda / std::sqrt(2.0));
    HalfWordUniforms u(rng);
    for (auto& m : mask) m = u() < p ? 1 : 0;
}

double make_bit_mask(double mu_lambda, double sigma_lambda, Rng& rng, std::span<std::uint8_t> mask) {
    const double lambda = sample_lambda(mu_lambda, sigma_lambda, rng);
    make_bit_mask(lambda, rng, mask);
    return lambda;
}

void mutate_bits_with(std::span<const std::uint8_t> base, std::span<const std::uint8_t> archive_member,
                      std::span<const std::uint8_t> r2, std::span<const std::uint8_t> r3,
                      std::span<const std::uint8_t> mask, std::span<std::uint8_t> donor) {
    for (std::size_t i = 0; i < base.size(); ++i)
        donor[i] = base[i] ^ (mask[i] & (archive_member[i] ^ base[i])) ^ (mask[i] & (r2[i] ^ r3[i]));
}

BitMutationDraw mutate_bits(int base, const BitPopulation& pop, std::span<const std::uint8_t> mask, Rng& rng,
                            std::span<std::uint8_t> donor) {
    if (pop.size() < 4) throw ConfigError("mutation needs at least 4 members, got " + std::to_string(pop.size()));
    if (pop.archive.empty()) throw UsageError("mutation drawn from an empty archive");
    BitMutationDraw draw;
    draw.archive_pick = pop.archive[rng.below(pop.archive.size())];
    draw_distinct_pair(base, pop.size(), rng, draw.r2, draw.r3);
    mutate_bits_with(pop.member(base), pop.member(draw.archive_pick), pop.member(draw.r2), pop.member(draw.r3), mask,
                     donor);
    return draw;
}

int crossover_bits(std::span<const std::uint8_t> target, std::span<const std::uint8_t> donor, double cr, Rng& rng,
                   std::span<std::uint8_t> trial) {
    int inherited = 0;
    HalfWordUniforms u(rng);
    for (std::size_t a = 0; a < target.size(); ++a) {
        if (u() <= cr) {
            trial[a] = donor[a];
            ++inherited;
        } else {
            trial[a] = target[a];
        }
    }
    return inherited;
}

BitPopulation initialize_bits(const BitObjective& cf, int dim, const DeParams& params, std::uint64_t seed) {
    params.validate();
    if (dim < 1) throw ConfigError("genome length must be >= 1");
    BitPopulation pop;
    pop.dim = dim;
    pop.members.resize(static_cast<std::size_t>(params.population_size) * dim);
    pop.cf.resize(params.population_size);
    for (int i = 0; i < params.population_size; ++i) {
        Rng rng = member_stream(seed, 0, i);
        auto b = pop.member(i);
        std::uint64_t word = 0;
        for (int k = 0; k < dim; ++k) {
            if (k % 64 == 0) word = rng();
            b[k] = static_cast<std::uint8_t>((word >> (k % 64)) & 1U);
        }
        pop.cf[i] = cf(b);
    }
    pop.eval_count = params.population_size;
    pop.archive = best_indices(pop.cf, params.archive_size());
    return pop;
}

RunResult<BitGenome> run_bits(const BitObjective& cf, int dim, const DeParams& params, std::uint64_t seed,
                              const BitObserver& observer) {
    BitPopulation pop = initialize_bits(cf, dim, params, seed);
    const int np = pop.size();

    RunResult<BitGenome> out;
    int best = pop.archive.front();
    double best_cf = pop.cf[best];
    out.best_cf_trace.push_back(best_cf);
    if (observer) observer(0, pop.member(best), best_cf);

    std::vector<std::uint8_t> trials(pop.members.size());
    std::vector<double> trial_cf(np), lambdas(np), crs(np);
    std::vector<std::uint8_t> mask(dim), donor(dim);
    std::vector<double> s_cr, s_lambda;
    s_cr.reserve(np);
    s_lambda.reserve(np);

    int stall = 0;
    for (int g = 1; g <= params.max_generations; ++g) {
        for (int i = 0; i < np; ++i) {
            Rng rng = member_stream(seed, g, i);
            lambdas[i] = make_bit_mask(pop.means.mu_lambda, params.sigma_lambda, rng, mask);
            crs[i] = sample_cr(pop.means.mu_cr, params.sigma_cr, rng);
            mutate_bits(i, pop, mask, rng, donor);
            std::span<std::uint8_t> trial{trials.data() + static_cast<std::size_t>(i) * dim,
                                          static_cast<std::size_t>(dim)};
            crossover_bits(pop.member(i), donor, crs[i], rng, trial);
            trial_cf[i] = cf(trial);
        }
        pop.eval_count += np;

        s_cr.clear();
        s_lambda.clear();
        for (int i = 0; i < np; ++i) {
            if (!bit_trial_survives(trial_cf[i], pop.cf[i])) continue;
            std::copy_n(trials.data() + static_cast<std::size_t>(i) * dim, dim, pop.member(i).begin());
            pop.cf[i] = trial_cf[i];
            s_cr.push_back(crs[i]);
            s_lambda.push_back(lambdas[i]);
        }
        pop.archive = best_indices(pop.cf, params.archive_size());
        pop.means = adapt_bits(pop.means, s_cr, s_lambda, params.adapt_rate);
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

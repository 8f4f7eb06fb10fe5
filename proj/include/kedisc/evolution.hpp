#pragma once

#include "kedisc/knowledge.hpp"
#include "kedisc/rng.hpp"
#include "kedisc/sparsity.hpp"
#include "kedisc/tokens.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kedisc {

enum class Mode { Classical, Modified };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

struct EvolutionConfig {
    std::size_t population_size = 8;
    std::size_t epochs = 7;
    /// Terms per equation including the target.
    std::size_t n_terms_max = 3;
    std::size_t t_max = 2;
    double crossover_rate = 0.5;
    double mutation_term_rate = 1.0;
    double mutation_token_rate = 1.0;
    /// Offspring bred per generation, as a multiple of the population size.
    std::size_t offspring_factor = 3;
    /// Start every equation at n_terms_max terms instead of a uniform size in 2..n_terms_max.
    bool full_initial_size = true;
    /// Mutate a child again (up to resample_attempts times) while its term set was
    /// already evaluated in this run.
    bool avoid_revisits = true;
    Mode mode = Mode::Classical;
    std::uint64_t seed = 0;
    double mf = kDefaultMixingFactor;
    /// Attempts at drawing a replacement that passes the generation rules.
    int resample_attempts = 10;
    FitOptions fit;

    void validate() const;
};

/// Chromosomes of n_terms_max (or 2..n_terms_max) distinct terms. Terms are drawn uniformly from the
/// space, or from the individual's importance distribution when dist_guess is given.
/// Targets are selected but nothing is fitted.
std::vector<Chromosome> init_population(const TermSpace& space, const EvolutionConfig& cfg, Rng& rng,
                                        const InitialGuess* dist_guess = nullptr);

/// Swaps one term between the parents. Offspring whose structure changed are
/// invalidated (coefficients and fitness cleared).
std::pair<Chromosome, Chromosome> crossover_classical(const Chromosome& a, const Chromosome& b,
                                                      const TermSpace& space, Rng& rng, int attempts = 10);

/// As crossover_classical, but the term a donates is drawn proportionally to its
/// weight under dist_b, and symmetrically.
std::pair<Chromosome, Chromosome> crossover_modified(const Chromosome& a, const Chromosome& b,
                                                     const ImportanceDistribution& dist_a,
                                                     const ImportanceDistribution& dist_b, const TermSpace& space,
                                                     Rng& rng, int attempts = 10);

/// Token and term mutation. With a dist, replacement tokens (also those of fresh terms)
/// follow its token marginals; without one they are uniform. The target
/// term is never replaced by term mutation. Returns true when the structure changed.
bool mutate(Chromosome& c, const TermSpace& space, const ImportanceDistribution* dist,
            const EvolutionConfig& cfg, Rng& rng);

/// Random fresh term: length uniform in 1..t_max, tokens uniform or from token weights.
Term random_term(const TermSpace& space, const std::vector<std::pair<Token, double>>* token_weights, Rng& rng);

/// Selects a fresh target and fits; fit failures give fitness 0.
void refit(Chromosome& c, const TermEvaluator& eval, const FitOptions& opts, Rng& rng);

/// Each generation breeds offspring_factor * population_size children; the best
/// individual survives and the rest of the population is refilled from the fittest
/// offspring, skipping repeated term sets. Final population sorted by fitness, best
/// first. Modified mode needs a guess.
std::vector<Chromosome> evolve(const TermEvaluator& eval, const TermSpace& space, const EvolutionConfig& cfg,
                               const InitialGuess* guess = nullptr);

} // namespace kedisc

#pragma once

#include "kedisc/rng.hpp"
#include "kedisc/tokens.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kedisc {

/// Coefficient map over canonical terms, e.g. extracted from a trained SymNet.
struct InitialGuess {
    std::vector<std::pair<Term, double>> entries;
    /// Polynomial degree-0 part; not a term, kept for reporting.
    double constant = 0.0;
    std::string source = "manual";

    /// Adds c to the entry with the same canonical key, inserting it if new.
    void add(const Term& t, double c);
    std::optional<double> coefficient(const Term& t) const;
};

struct ImportanceDistribution {
    std::vector<Term> support;
    std::vector<double> probabilities;
    bool smoothed = false;
};

inline constexpr double kDefaultMixingFactor = 2.4;

/// |coefficient| sums per space term, floored at 1e-8 * max (or 1e-8 when all zero).
std::vector<double> map_guess_to_space(const InitialGuess& guess, const TermSpace& space);

/// Drops the chromosome's own and restricted terms. Throws NoCandidatesError when
/// nothing remains.
std::pair<std::vector<Term>, std::vector<double>> restrict_for_individual(const std::vector<double>& weights,
                                                                          const TermSpace& space,
                                                                          const Chromosome& c);

/// Mixes the weights with their mean so that max/min does not exceed mf, then normalizes.
ImportanceDistribution smooth_and_normalize(std::span<const double> coefs, double mf,
                                            std::vector<Term> support = {});

ImportanceDistribution build_individual_distribution(const InitialGuess& guess, const TermSpace& space,
                                                     const Chromosome& c, double mf);

/// Distribution over the whole space without restriction.
ImportanceDistribution build_space_distribution(const InitialGuess& guess, const TermSpace& space, double mf);

struct TuneOptions {
    /// Weight of the k favoured terms relative to the rest in the ideal distribution.
    double ideal_ratio = 3.25;
    double lo = 1.0;
    double hi = 5.0;
    double step = 0.1;
};

struct TuneResult {
    double mf = kDefaultMixingFactor;
    /// (mf, KL(P || Q(mf))) over the grid.
    std::vector<std::pair<double, double>> curve;
};

double kl_divergence(std::span<const double> p, std::span<const double> q);

TuneResult tune_mixing_factor(const InitialGuess& guess, const TermSpace& space, std::size_t k_expected,
                              const TuneOptions& opts = {});

std::size_t sample_index(const ImportanceDistribution& d, Rng& rng);
const Term& sample_term(const ImportanceDistribution& d, Rng& rng);

/// Token weights: sum of the probabilities of the terms containing each token,
/// renormalized. Sorted by label.
std::vector<std::pair<Token, double>> token_marginals(const ImportanceDistribution& d);
Token sample_token(const ImportanceDistribution& d, Rng& rng);

/// JSON list of {"factors": [...], "coefficient": c}.
std::string guess_to_json(const InitialGuess& g);
InitialGuess guess_from_json(const std::string& text, std::size_t ndim = 2);
void save_guess(const InitialGuess& g, const std::string& path);
InitialGuess load_guess(const std::string& path, std::size_t ndim = 2);

} // namespace kedisc

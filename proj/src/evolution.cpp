#include "kedisc/evolution.hpp"

#include "kedisc/errors.hpp"

#include <algorithm>
#include <set>

namespace kedisc {

std::string to_string(Mode m) { return m == Mode::Classical ? "classical" : "modified"; }

Mode parse_mode(const std::string& s)
{
    if (s == "classical") return Mode::Classical;
    if (s == "modified") return Mode::Modified;
    throw ConfigError("unknown mode '" + s + "' (expected classical or modified)");
}

void EvolutionConfig::validate() const
{
    auto rate = [](double r, const char* name) {
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    rate(crossover_rate, "crossover rate");
    rate(mutation_term_rate, "term mutation rate");
    rate(mutation_token_rate, "token mutation rate");
    if (population_size < 2) throw ConfigError("population size must be at least 2");
    if (n_terms_max < 2) throw ConfigError("equations need room for at least two terms");
    if (t_max < 1) throw ConfigError("t_max must be at least 1");
    if (!(mf >= 1.0 && mf <= 5.0)) throw ConfigError("mixing factor must lie in [1.0, 5.0]");
    if (resample_attempts < 1) throw ConfigError("resample attempts must be positive");
    if (offspring_factor < 1) throw ConfigError("offspring factor must be at least 1");
}

namespace {

std::vector<Token> sorted_pool(const TermSpace& space)
{
    auto pool = space.pool();
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    return pool;
}

double fitness_of(const Chromosome& c) { return c.fitness.value_or(0.0); }

std::vector<std::string> term_set_key(const Chromosome& c)
{
    std::vector<std::string> k;
    for (const auto& t : c.terms) k.push_back(t.key());
    std::sort(k.begin(), k.end());
    return k;
}

double weight_in(const ImportanceDistribution& d, const Term& t)
{
    for (std::size_t i = 0; i < d.support.size(); ++i)
        if (d.support[i] == t) return d.probabilities[i];
    return 0.0;
}

Chromosome without(const Chromosome& c, std::size_t slot)
{
    Chromosome out;
    out.restricted = c.restricted;
    for (std::size_t i = 0; i < c.terms.size(); ++i)
        if (i != slot) out.terms.push_back(c.terms[i]);
    return out;
}

// Puts incoming into slot of child. On a rule violation the incoming term is
// redrawn uniformly from the space; gives up (returns false) after attempts.
bool place(Chromosome& child, std::size_t slot, Term incoming, const TermSpace& space, Rng& rng, int attempts)
{
    const Chromosome rest = without(child, slot);
    for (int k = 0; k <= attempts; ++k) {
        if (k > 0) incoming = space[rng.index(space.size())];
        if (!violates_rules(incoming, rest)) {
            child.terms[slot] = std::move(incoming);
            return true;
        }
    }
    return false;
}

// Term exchange. wa weights the terms a may donate, wb those of b; both are
// restricted to terms the other parent lacks.
std::pair<Chromosome, Chromosome> exchange(const Chromosome& a, const Chromosome& b,
                                           const ImportanceDistribution* dist_a, const ImportanceDistribution* dist_b,
                                           const TermSpace& space, Rng& rng, int attempts)
{
    std::vector<std::size_t> from_a, from_b;
    for (std::size_t i = 0; i < a.terms.size(); ++i)
        if (!b.contains(a.terms[i])) from_a.push_back(i);
    for (std::size_t j = 0; j < b.terms.size(); ++j)
        if (!a.contains(b.terms[j])) from_b.push_back(j);
    if (from_a.empty() || from_b.empty()) return {a, b};

    std::vector<double> wa(from_a.size(), 1.0), wb(from_b.size(), 1.0);
    if (dist_b)
        for (std::size_t k = 0; k < from_a.size(); ++k) wa[k] = weight_in(*dist_b, a.terms[from_a[k]]);
    if (dist_a)
        for (std::size_t k = 0; k < from_b.size(); ++k) wb[k] = weight_in(*dist_a, b.terms[from_b[k]]);
    const std::size_t i = from_a[rng.categorical(wa)];
    const std::size_t j = from_b[rng.categorical(wb)];

    Chromosome ca = a, cb = b;
    if (place(ca, i, b.terms[j], space, rng, attempts))
        ca.invalidate();
    else
        ca = a;
    if (place(cb, j, a.terms[i], space, rng, attempts))
        cb.invalidate();
    else
        cb = b;
    return {std::move(ca), std::move(cb)};
}

Token draw_token(const std::vector<Token>& pool, const std::vector<std::pair<Token, double>>* weights, Rng& rng)
{
    if (!weights) return pool[rng.index(pool.size())];
    std::vector<double> w;
    for (const auto& [tok, p] : *weights) w.push_back(p);
    return (*weights)[rng.categorical(w)].first;
}

} // namespace

std::vector<Chromosome> init_population(const TermSpace& space, const EvolutionConfig& cfg, Rng& rng,
                                        const InitialGuess* dist_guess)
{
    cfg.validate();
    if (space.size() < cfg.n_terms_max)
        throw ConfigError("term space has " + std::to_string(space.size()) + " terms, fewer than the " +
                          std::to_string(cfg.n_terms_max) + " an equation may hold");
    std::vector<double> mapped;
    if (dist_guess) mapped = map_guess_to_space(*dist_guess, space);

    std::vector<Chromosome> pop;
    for (std::size_t k = 0; k < cfg.population_size; ++k) {
        Chromosome c;
        const std::size_t n = cfg.full_initial_size ? cfg.n_terms_max : 2 + rng.index(cfg.n_terms_max - 1);
        while (c.terms.size() < n) {
            auto [terms, w] = restrict_for_individual(mapped.empty() ? std::vector<double>(space.size(), 1.0) : mapped,
                                                      space, c);
            if (dist_guess) {
                auto d = smooth_and_normalize(w, cfg.mf, std::move(terms));
                c.terms.push_back(sample_term(d, rng));
            } else {
                c.terms.push_back(terms[rng.index(terms.size())]);
            }
        }
        pop.push_back(std::move(c));
    }
    return pop;
}

std::pair<Chromosome, Chromosome> crossover_classical(const Chromosome& a, const Chromosome& b,
                                                      const TermSpace& space, Rng& rng, int attempts)
{
    return exchange(a, b, nullptr, nullptr, space, rng, attempts);
}

std::pair<Chromosome, Chromosome> crossover_modified(const Chromosome& a, const Chromosome& b,
                                                     const ImportanceDistribution& dist_a,
                                                     const ImportanceDistribution& dist_b, const TermSpace& space,
                                                     Rng& rng, int attempts)
{
    return exchange(a, b, &dist_a, &dist_b, space, rng, attempts);
}

Term random_term(const TermSpace& space, const std::vector<std::pair<Token, double>>* token_weights, Rng& rng)
{
    const auto pool = sorted_pool(space);
    const std::size_t len = 1 + rng.index(space.t_max());
    std::vector<Token> f;
    for (std::size_t k = 0; k < len; ++k) f.push_back(draw_token(pool, token_weights, rng));
    return Term(std::move(f));
}

bool mutate(Chromosome& c, const TermSpace& space, const ImportanceDistribution* dist, const EvolutionConfig& cfg,
            Rng& rng)
{
    if (c.terms.empty()) return false;
    const auto pool = sorted_pool(space);
    std::vector<std::pair<Token, double>> marginals;
    if (dist) marginals = token_marginals(*dist);
    const auto* weights = dist ? &marginals : nullptr;
    bool changed = false;

    if (rng.bernoulli(cfg.mutation_token_rate)) {
        const std::size_t k = rng.index(c.terms.size());
        const std::size_t f = rng.index(c.terms[k].size());
        for (int a = 0; a < cfg.resample_attempts; ++a) {
            Term cand = c.terms[k].with_factor(f, draw_token(pool, weights, rng));
            if (admissible(cand, space.t_max()) && !violates_rules(cand, c)) {
                c.terms[k] = std::move(cand);
                changed = true;
                break;
            }
        }
    }

    if (rng.bernoulli(cfg.mutation_term_rate)) {
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < c.terms.size(); ++i)
            if (!(c.target && *c.target == i)) slots.push_back(i);
        if (!slots.empty()) {
            const std::size_t k = slots[rng.index(slots.size())];
            for (int a = 0; a < cfg.resample_attempts; ++a) {
                Term cand = random_term(space, weights, rng);
                if (admissible(cand, space.t_max()) && !violates_rules(cand, c)) {
                    c.terms[k] = std::move(cand);
                    changed = true;
                    break;
                }
            }
        }
    }
    if (changed) c.invalidate();
    return changed;
}

void refit(Chromosome& c, const TermEvaluator& eval, const FitOptions& opts, Rng& rng)
{
    try {
        select_target(c, rng);
        fit_chromosome(c, eval, opts);
    } catch (const Error&) {
        c.coefficients.assign(c.terms.size(), 0.0);
        c.kept.assign(c.terms.size(), false);
        c.fitness = 0.0;
    }
}

std::vector<Chromosome> evolve(const TermEvaluator& eval, const TermSpace& space, const EvolutionConfig& cfg,
                               const InitialGuess* guess)
{
    cfg.validate();
    const bool modified = cfg.mode == Mode::Modified;
    if (modified && !guess) throw ConfigError("modified mode needs an initial guess");

    std::vector<double> mapped;
    if (modified) mapped = map_guess_to_space(*guess, space);
    // Importance over the individual's complement; empty when nothing is left.
    auto dist_for = [&](const Chromosome& c) -> std::optional<ImportanceDistribution> {
        try {
            auto [terms, w] = restrict_for_individual(mapped, space, c);
            return smooth_and_normalize(w, cfg.mf, std::move(terms));
        } catch (const NoCandidatesError&) {
            return std::nullopt;
        }
    };

    Rng init_rng(derive_seed(cfg.seed, 0));
    auto pop = init_population(space, cfg, init_rng, modified ? guess : nullptr);
    for (std::size_t k = 0; k < pop.size(); ++k) {
        Rng r(derive_seed(cfg.seed, 0, k + 1));
        refit(pop[k], eval, cfg.fit, r);
    }
    // Term sets evaluated so far in this run.
    std::set<std::vector<std::string>> visited;
    for (const auto& c : pop) visited.insert(term_set_key(c));
    auto by_fitness = [](const Chromosome& x, const Chromosome& y) { return fitness_of(x) > fitness_of(y); };

    const std::size_t n = cfg.population_size;
    const std::size_t n_offspring = n * cfg.offspring_factor;
    for (std::size_t gen = 1; gen <= cfg.epochs; ++gen) {
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
        std::vector<Chromosome> offspring;
        for (std::size_t slot = 1; offspring.size() < n_offspring; slot += 2) {
            Rng r(derive_seed(cfg.seed, gen, slot));
            auto tournament = [&] {
                const std::size_t i = r.index(pop.size());
                const std::size_t j = r.index(pop.size());
                return fitness_of(pop[j]) > fitness_of(pop[i]) ? j : i;
            };
            const Chromosome& a = pop[tournament()];
            const Chromosome& b = pop[tournament()];
            std::pair<Chromosome, Chromosome> kids{a, b};
            if (r.bernoulli(cfg.crossover_rate)) {
                std::optional<ImportanceDistribution> da, db;
                if (modified) {
                    da = dist_for(a);
                    db = dist_for(b);
                }
                if (da && db)
                    kids = crossover_modified(a, b, *da, *db, space, r, cfg.resample_attempts);
                else
                    kids = crossover_classical(a, b, space, r, cfg.resample_attempts);
            }
            for (Chromosome* child : {&kids.first, &kids.second}) {
                const int tries = cfg.avoid_revisits ? cfg.resample_attempts : 1;
                for (int t = 0; t < tries; ++t) {
                    std::optional<ImportanceDistribution> d;
                    if (modified) d = dist_for(*child);
                    mutate(*child, space, d ? &*d : nullptr, cfg, r);
                    if (!visited.count(term_set_key(*child))) break;
                }
                visited.insert(term_set_key(*child));
                if (!child->fitness) refit(*child, eval, cfg.fit, r);
            }
            offspring.push_back(std::move(kids.first));
            if (offspring.size() < n_offspring) offspring.push_back(std::move(kids.second));
        }

        // Elite plus the fittest offspring, one per term set while enough distinct ones exist.
        std::vector<Chromosome> pool;
        pool.push_back(std::move(pop.front()));
        for (auto& c : offspring) pool.push_back(std::move(c));
        std::stable_sort(pool.begin() + 1, pool.end(), by_fitness);
        std::vector<Chromosome> next;
        std::vector<std::vector<std::string>> seen;
        std::vector<std::size_t> repeats;
        for (std::size_t i = 0; i < pool.size() && next.size() < n; ++i) {
            auto key = term_set_key(pool[i]);
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
                repeats.push_back(i);
                continue;
            }
            seen.push_back(std::move(key));
            next.push_back(std::move(pool[i]));
        }
        for (std::size_t i = 0; next.size() < n && i < repeats.size(); ++i) next.push_back(std::move(pool[repeats[i]]));
        pop = std::move(next);
    }
    std::stable_sort(pop.begin(), pop.end(), by_fitness);
    return pop;
}

} // namespace kedisc

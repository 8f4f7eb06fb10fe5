#include "kedisc/knowledge.hpp"

#include "kedisc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace kedisc {

using nlohmann::json;

void InitialGuess::add(const Term& t, double c)
{
    for (auto& [term, coef] : entries)
        if (term == t) {
            coef += c;
            return;
        }
    entries.emplace_back(t, c);
}

std::optional<double> InitialGuess::coefficient(const Term& t) const
{
    for (const auto& [term, coef] : entries)
        if (term == t) return coef;
    return std::nullopt;
}

std::vector<double> map_guess_to_space(const InitialGuess& guess, const TermSpace& space)
{
    std::vector<double> w(space.size(), 0.0);
    for (const auto& [term, coef] : guess.entries) {
        if (!std::isfinite(coef)) throw NumericError("non-finite coefficient in initial guess for " + term.key());
        if (auto i = space.find(term)) w[*i] += std::abs(coef);
    }
    double mx = 0.0;
    for (double v : w) mx = std::max(mx, v);
    const double floor = 1e-8 * (mx > 0.0 ? mx : 1.0);
    for (double& v : w) v = std::max(v, floor);
    return w;
}

std::pair<std::vector<Term>, std::vector<double>> restrict_for_individual(const std::vector<double>& weights,
                                                                          const TermSpace& space,
                                                                          const Chromosome& c)
{
    if (weights.size() != space.size()) throw ConfigError("weights are not aligned with the term space");
    std::vector<Term> terms;
    std::vector<double> w;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (violates_rules(space[i], c)) continue;
        terms.push_back(space[i]);
        w.push_back(weights[i]);
    }
    if (terms.empty()) throw NoCandidatesError("individual already holds every term of the space");
    return {std::move(terms), std::move(w)};
}

ImportanceDistribution smooth_and_normalize(std::span<const double> coefs, double mf, std::vector<Term> support)
{
    if (!(mf >= 1.0 && mf <= 5.0)) throw ConfigError("mixing factor must lie in [1.0, 5.0]");
    if (coefs.empty()) throw DomainError("cannot build a distribution over no terms");
    if (!support.empty() && support.size() != coefs.size()) throw ConfigError("support and weights differ in size");
    std::vector<double> v(coefs.begin(), coefs.end());
    for (double& x : v) {
        if (!std::isfinite(x)) throw DomainError("non-finite importance weight");
        x = std::abs(x);
        if (!(x > 0.0)) throw DomainError("importance weights must be positive");
    }
    const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    const double mn = *mn_it;
    const double mx = *mx_it;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());

    ImportanceDistribution d;
    d.support = std::move(support);
    if (mx / mn > mf) {
        const double min_max_f = mf * mn - mx;
        const double smooth_f = min_max_f / (min_max_f - (mf - 1.0) * mean);
        for (double& x : v) x = (1.0 - smooth_f) * x + smooth_f * mean;
        d.smoothed = true;
    }
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= total;
    d.probabilities = std::move(v);
    return d;
}

ImportanceDistribution build_individual_distribution(const InitialGuess& guess, const TermSpace& space,
                                                     const Chromosome& c, double mf)
{
    auto [terms, w] = restrict_for_individual(map_guess_to_space(guess, space), space, c);
    return smooth_and_normalize(w, mf, std::move(terms));
}

ImportanceDistribution build_space_distribution(const InitialGuess& guess, const TermSpace& space, double mf)
{
    return smooth_and_normalize(map_guess_to_space(guess, space), mf, space.terms());
}

double kl_divergence(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size()) throw ConfigError("distributions differ in size");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
    return kl;
}

TuneResult tune_mixing_factor(const InitialGuess& guess, const TermSpace& space, std::size_t k_expected,
                              const TuneOptions& opts)
{
    if (k_expected < 1) throw ConfigError("expected term count must be at least 1");
    if (!(opts.step > 0.0) || !(opts.lo >= 1.0) || !(opts.hi <= 5.0) || opts.lo > opts.hi)
        throw ConfigError("mixing factor grid must lie in [1.0, 5.0] with a positive step");
    TuneResult res;
    const auto w = map_guess_to_space(guess, space);
    const auto [mn, mx] = std::minmax_element(w.begin(), w.end());
    if (*mn == *mx) return res;

    // Ideal distribution: the k largest mapped weights favoured by ideal_ratio.
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    std::vector<double> p(w.size(), 1.0);
    for (std::size_t r = 0; r < std::min(k_expected, w.size()); ++r) p[order[r]] = opts.ideal_ratio;
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= total;

    double best = std::numeric_limits<double>::infinity();
    const auto steps = static_cast<long>(std::floor((opts.hi - opts.lo) / opts.step + 1e-9));
    for (long i = 0; i <= steps; ++i) {
        // Rounded so that grid points print and compare as their decimal values.
        const double mf = std::round((opts.lo + static_cast<double>(i) * opts.step) * 1e9) / 1e9;
        const auto q = smooth_and_normalize(w, mf);
        const double kl = kl_divergence(p, q.probabilities);
        res.curve.emplace_back(mf, kl);
        if (std::abs(kl) < best) {
            best = std::abs(kl);
            res.mf = mf;
        }
    }
    return res;
}

std::size_t sample_index(const ImportanceDistribution& d, Rng& rng)
{
    if (d.probabilities.empty()) throw NoCandidatesError("cannot sample from an empty distribution");
    return rng.categorical(d.probabilities);
}

const Term& sample_term(const ImportanceDistribution& d, Rng& rng)
{
    if (d.support.size() != d.probabilities.size()) throw NoCandidatesError("distribution has no term support");
    return d.support[sample_index(d, rng)];
}

std::vector<std::pair<Token, double>> token_marginals(const ImportanceDistribution& d)
{
    std::map<std::string, std::pair<Token, double>> acc;
    for (std::size_t i = 0; i < d.support.size(); ++i) {
        std::string last;
        for (const auto& tok : d.support[i].factors()) {
            if (tok.label == last) continue;
            last = tok.label;
            auto [it, inserted] = acc.try_emplace(tok.label, tok, 0.0);
            it->second.second += d.probabilities[i];
        }
    }
    std::vector<std::pair<Token, double>> out;
    double total = 0.0;
    for (auto& [label, tw] : acc) {
        total += tw.second;
        out.push_back(tw);
    }
    if (out.empty()) throw NoCandidatesError("distribution has no tokens");
    for (auto& [tok, w] : out) w /= total;
    return out;
}

Token sample_token(const ImportanceDistribution& d, Rng& rng)
{
    auto m = token_marginals(d);
    std::vector<double> w;
    for (const auto& [tok, p] : m) w.push_back(p);
    return m[rng.categorical(w)].first;
}

std::string guess_to_json(const InitialGuess& g)
{
    json arr = json::array();
    for (const auto& [term, coef] : g.entries) arr.push_back({{"factors", term.labels()}, {"coefficient", coef}});
    return arr.dump(2);
}

InitialGuess guess_from_json(const std::string& text, std::size_t ndim)
{
    InitialGuess g;
    g.source = "file";
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::exception& e) {
        throw IngestionError(std::string("guess is not valid JSON: ") + e.what());
    }
    if (!arr.is_array()) throw IngestionError("guess JSON must be a list of terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        if (!e.contains("factors") || !e.contains("coefficient"))
            throw IngestionError("guess entry " + std::to_string(i) + " needs 'factors' and 'coefficient'");
        auto labels = e["factors"].get<std::vector<std::string>>();
        double c = e["coefficient"].get<double>();
        if (!std::isfinite(c)) throw IngestionError("guess entry " + std::to_string(i) + " has a non-finite coefficient");
        if (labels.empty()) {
            g.constant += c;
            continue;
        }
        g.add(Term::from_labels(labels, ndim), c);
    }
    return g;
}

void save_guess(const InitialGuess& g, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    out << guess_to_json(g) << '\n';
}

InitialGuess load_guess(const std::string& path, std::size_t ndim)
{
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return guess_from_json(ss.str(), ndim);
}

} // namespace kedisc

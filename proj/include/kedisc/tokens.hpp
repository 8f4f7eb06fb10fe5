#pragma once

#include "kedisc/field.hpp"

#include <compare>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kedisc {

enum class TokenFamily { Derivative, Trig };

/// A parametrized elementary function evaluated on the grid. Identity and
/// ordering are by label; optimizable parameters do not enter the label.
struct Token {
    TokenFamily family = TokenFamily::Derivative;
    std::string label;
    std::vector<double> params;
    std::vector<bool> optimizable;

    static Token derivative(std::vector<int> orders);
    /// cos(a*t)*sin(b*x); a and b are tuned on a discrete frequency grid at fit time.
    static Token trig(double a = 0.0, double b = 0.0);
    static Token from_label(const std::string& label, std::size_t ndim = 2);

    bool single_occurrence() const { return family == TokenFamily::Trig; }
    DerivativeSpec derivative_spec() const;

    friend bool operator==(const Token& a, const Token& b) { return a.label == b.label; }
    friend std::strong_ordering operator<=>(const Token& a, const Token& b) { return a.label <=> b.label; }
};

std::string derivative_label(const std::vector<int>& orders);

/// Product of tokens with factors kept sorted by label, so commuted products
/// compare equal.
class Term {
public:
    Term() = default;
    explicit Term(std::vector<Token> factors);
    static Term from_labels(const std::vector<std::string>& labels, std::size_t ndim = 2);

    const std::vector<Token>& factors() const { return factors_; }
    std::size_t size() const { return factors_.size(); }
    std::vector<std::string> labels() const;
    const std::string& key() const { return key_; }
    bool contains(const Token& t) const;
    std::size_t count_single_occurrence() const;
    Term with_factor(std::size_t i, const Token& t) const;
    Term with_params(std::size_t i, std::vector<double> params) const;
    /// Key including optimizable parameter values.
    std::string param_key() const;

    friend bool operator==(const Term& a, const Term& b) { return a.key_ == b.key_; }
    /// Canonical order: by size, then lexicographic by factor labels.
    friend std::strong_ordering operator<=>(const Term& a, const Term& b);

private:
    std::vector<Token> factors_;
    std::string key_;
};

struct TermHash {
    std::size_t operator()(const Term& t) const { return std::hash<std::string>{}(t.key()); }
};

/// A candidate equation: target term = sum of coefficient * term over the rest.
struct Chromosome {
    std::vector<Term> terms;
    std::vector<double> coefficients;
    std::vector<bool> kept;
    std::optional<std::size_t> target;
    std::optional<double> fitness;
    std::vector<Term> restricted;

    bool contains(const Term& t) const;
    /// Kept terms including the target.
    std::vector<Term> structure() const;
    /// Drops fit results after a structural change.
    void invalidate();
};

struct TokenPoolConfig {
    /// Maximum pure derivative order per axis (time first).
    std::vector<int> max_orders{1, 2};
    bool trig = false;
};

std::vector<Token> build_token_pool(const TokenPoolConfig& config);

/// All admissible terms of up to t_max factors in canonical order.
class TermSpace {
public:
    TermSpace() = default;
    TermSpace(std::vector<Token> pool, std::vector<Term> terms, std::size_t t_max);

    std::size_t size() const { return terms_.size(); }
    const Term& operator[](std::size_t i) const { return terms_[i]; }
    const std::vector<Term>& terms() const { return terms_; }
    const std::vector<Token>& pool() const { return pool_; }
    std::size_t t_max() const { return t_max_; }
    std::optional<std::size_t> find(const Term& t) const;

private:
    std::vector<Token> pool_;
    std::vector<Term> terms_;
    std::size_t t_max_ = 1;
    std::unordered_map<std::string, std::size_t> index_;
};

TermSpace enumerate_term_space(const std::vector<Token>& pool, std::size_t t_max);

/// Size bounds and single-occurrence families.
bool admissible(const Term& t, std::size_t t_max);

/// True iff the candidate duplicates a chromosome term or is restricted for it.
bool violates_rules(const Term& candidate, const Chromosome& chromosome);

/// Token values over the full grid.
std::vector<double> evaluate_token(const Token& token, const DerivativeCache& cache);
Field evaluate_term(const Term& term, const Field& f);

/// Per-axis boundary margin of one stencil half-width for the given caps.
std::vector<std::size_t> interior_margins(const std::vector<int>& max_orders);

/// Caches term evaluations restricted to the interior of one field.
class TermEvaluator {
public:
    TermEvaluator(Field f, std::vector<std::size_t> margins);

    const Field& field() const { return cache_.field(); }
    const DerivativeCache& derivatives() const { return cache_; }
    std::size_t interior_size() const { return interior_.size(); }
    const std::vector<std::size_t>& interior_indices() const { return interior_; }

    std::shared_ptr<const std::vector<double>> interior(const Term& term) const;
    std::shared_ptr<const std::vector<double>> interior(const Token& token) const;

private:
    DerivativeCache cache_;
    std::vector<std::size_t> interior_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, std::shared_ptr<const std::vector<double>>> terms_;
};

} // namespace kedisc

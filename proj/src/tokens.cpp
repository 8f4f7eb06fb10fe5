#include "kedisc/tokens.hpp"

#include "kedisc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace kedisc {

namespace {

constexpr const char* kAxisNames[] = {"t", "x", "y", "z"};
constexpr const char* kTrigLabel = "cos(a*t)*sin(b*x)";

} // namespace

std::string derivative_label(const std::vector<int>& orders)
{
    int total = 0;
    for (int o : orders) total += o;
    if (total == 0) return "u";
    std::ostringstream os;
    os << 'd';
    if (total > 1) os << '^' << total;
    os << "u/";
    for (std::size_t k = 0; k < orders.size(); ++k) {
        if (orders[k] == 0) continue;
        os << 'd' << kAxisNames[k];
        if (orders[k] > 1) os << '^' << orders[k];
    }
    return os.str();
}

Token Token::derivative(std::vector<int> orders)
{
    if (orders.size() > 4) throw ConfigError("at most four axes are supported");
    Token t;
    t.family = TokenFamily::Derivative;
    t.label = derivative_label(orders);
    for (int o : orders) {
        if (o < 0) throw ConfigError("negative derivative order in token");
        t.params.push_back(static_cast<double>(o));
        t.optimizable.push_back(false);
    }
    return t;
}

Token Token::trig(double a, double b)
{
    Token t;
    t.family = TokenFamily::Trig;
    t.label = kTrigLabel;
    t.params = {a, b};
    t.optimizable = {true, true};
    return t;
}

Token Token::from_label(const std::string& label, std::size_t ndim)
{
    if (label == kTrigLabel) return trig();
    std::vector<int> orders(ndim, 0);
    if (label == "u") return derivative(orders);
    // d[^n]u/d<ax>[^k]d<ax>[^k]...
    auto fail = [&] { return ConfigError("unrecognised token label '" + label + "'"); };
    std::size_t pos = label.find("u/");
    if (label.empty() || label[0] != 'd' || pos == std::string::npos) throw fail();
    std::size_t i = pos + 2;
    int total = 0;
    while (i < label.size()) {
        if (label[i] != 'd' || i + 1 >= label.size()) throw fail();
        char ax = label[i + 1];
        std::size_t k = 0;
        while (k < ndim && kAxisNames[k][0] != ax) ++k;
        if (k == ndim) throw fail();
        i += 2;
        int order = 1;
        if (i < label.size() && label[i] == '^') {
            std::size_t end = i + 1;
            while (end < label.size() && std::isdigit(static_cast<unsigned char>(label[end]))) ++end;
            if (end == i + 1) throw fail();
            order = std::stoi(label.substr(i + 1, end - i - 1));
            i = end;
        }
        orders[k] += order;
        total += order;
    }
    Token t = derivative(orders);
    if (t.label != label || total == 0) throw fail();
    return t;
}

DerivativeSpec Token::derivative_spec() const
{
    DerivativeSpec s;
    if (family != TokenFamily::Derivative) return s;
    for (double p : params) s.orders.push_back(static_cast<int>(p));
    return s;
}

Term::Term(std::vector<Token> factors) : factors_(std::move(factors))
{
    if (factors_.empty()) throw StructuralError("a term needs at least one factor");
    std::stable_sort(factors_.begin(), factors_.end());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (i) key_ += " * ";
        key_ += factors_[i].label;
    }
}

Term Term::from_labels(const std::vector<std::string>& labels, std::size_t ndim)
{
    std::vector<Token> f;
    for (const auto& l : labels) f.push_back(Token::from_label(l, ndim));
    return Term(std::move(f));
}

std::vector<std::string> Term::labels() const
{
    std::vector<std::string> out;
    for (const auto& f : factors_) out.push_back(f.label);
    return out;
}

bool Term::contains(const Token& t) const
{
    return std::find(factors_.begin(), factors_.end(), t) != factors_.end();
}

std::size_t Term::count_single_occurrence() const
{
    return static_cast<std::size_t>(
        std::count_if(factors_.begin(), factors_.end(), [](const Token& t) { return t.single_occurrence(); }));
}

Term Term::with_factor(std::size_t i, const Token& t) const
{
    auto f = factors_;
    f.at(i) = t;
    return Term(std::move(f));
}

Term Term::with_params(std::size_t i, std::vector<double> params) const
{
    Term out = *this;
    out.factors_.at(i).params = std::move(params);
    return out;
}

std::string Term::param_key() const
{
    std::ostringstream os;
    os << key_;
    for (const auto& f : factors_) {
        if (f.family != TokenFamily::Trig) continue;
        os.precision(17);
        for (double p : f.params) os << '|' << p;
    }
    return os.str();
}

std::strong_ordering operator<=>(const Term& a, const Term& b)
{
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (auto c = a.factors_[i].label <=> b.factors_[i].label; c != 0) return c;
    return std::strong_ordering::equal;
}

bool Chromosome::contains(const Term& t) const { return std::find(terms.begin(), terms.end(), t) != terms.end(); }

std::vector<Term> Chromosome::structure() const
{
    std::vector<Term> out;
    for (std::size_t i = 0; i < terms.size(); ++i)
        if ((target && *target == i) || (i < kept.size() && kept[i])) out.push_back(terms[i]);
    return out;
}

void Chromosome::invalidate()
{
    coefficients.clear();
    kept.clear();
    target.reset();
    fitness.reset();
}

std::vector<Token> build_token_pool(const TokenPoolConfig& config)
{
    if (config.max_orders.empty()) throw ConfigError("token pool needs at least one axis");
    const std::size_t nd = config.max_orders.size();
    std::vector<Token> pool;
    pool.push_back(Token::derivative(std::vector<int>(nd, 0)));
    for (std::size_t k = 0; k < nd; ++k) {
        if (config.max_orders[k] < 0 || config.max_orders[k] > kMaxDerivativeOrder)
            throw ConfigError("derivative cap must lie in [0, " + std::to_string(kMaxDerivativeOrder) + "]");
        for (int o = 1; o <= config.max_orders[k]; ++o) {
            std::vector<int> orders(nd, 0);
            orders[k] = o;
            pool.push_back(Token::derivative(orders));
        }
    }
    if (config.trig) {
        if (nd != 2) throw ConfigError("trigonometric tokens need a (t, x) grid");
        pool.push_back(Token::trig());
    }
    return pool;
}

TermSpace::TermSpace(std::vector<Token> pool, std::vector<Term> terms, std::size_t t_max)
    : pool_(std::move(pool)), terms_(std::move(terms)), t_max_(t_max)
{
    for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i].key(), i);
}

std::optional<std::size_t> TermSpace::find(const Term& t) const
{
    auto it = index_.find(t.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool admissible(const Term& t, std::size_t t_max)
{
    return t.size() >= 1 && t.size() <= t_max && t.count_single_occurrence() <= 1;
}

TermSpace enumerate_term_space(const std::vector<Token>& pool, std::size_t t_max)
{
    if (t_max < 1) throw ConfigError("t_max must be at least 1");
    std::vector<Token> sorted = pool;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<Term> terms;
    std::vector<Token> current;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (!current.empty()) {
            Term t(current);
            if (admissible(t, t_max)) terms.push_back(std::move(t));
        }
        if (current.size() == t_max) return;
        for (std::size_t i = start; i < sorted.size(); ++i) {
            current.push_back(sorted[i]);
            rec(i);
            current.pop_back();
        }
    };
    rec(0);
    std::sort(terms.begin(), terms.end());
    return TermSpace(pool, std::move(terms), t_max);
}

bool violates_rules(const Term& candidate, const Chromosome& chromosome)
{
    if (chromosome.contains(candidate)) return true;
    return std::find(chromosome.restricted.begin(), chromosome.restricted.end(), candidate) !=
           chromosome.restricted.end();
}

std::vector<double> evaluate_token(const Token& token, const DerivativeCache& cache)
{
    const Grid& g = cache.field().grid();
    if (token.family == TokenFamily::Derivative) return cache.get(token.derivative_spec())->values();
    const double a = token.params.at(0);
    const double b = token.params.at(1);
    const auto& t = g.axis(0);
    const auto& x = g.axis(1);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double ct = std::cos(a * t[i]);
        for (std::size_t j = 0; j < x.size(); ++j) v[i * x.size() + j] = ct * std::sin(b * x[j]);
    }
    return v;
}

Field evaluate_term(const Term& term, const Field& f)
{
    DerivativeCache cache(f);
    std::vector<double> v(f.size(), 1.0);
    for (const auto& tok : term.factors()) {
        auto tv = evaluate_token(tok, cache);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= tv[i];
    }
    return Field(f.grid_ptr(), std::move(v), term.key());
}

std::vector<std::size_t> interior_margins(const std::vector<int>& max_orders)
{
    std::vector<std::size_t> m;
    for (int o : max_orders) m.push_back(static_cast<std::size_t>(std::max(1, (o + 1) / 2)));
    return m;
}

TermEvaluator::TermEvaluator(Field f, std::vector<std::size_t> margins) : cache_(std::move(f))
{
    const Grid& g = cache_.field().grid();
    if (margins.size() != g.ndim()) throw ConfigError("margin count does not match grid dimension");
    for (std::size_t k = 0; k < g.ndim(); ++k)
        if (2 * margins[k] >= g.shape()[k]) throw ConfigError("boundary margin leaves no interior points");
    // Enumerate interior flat indices in row-major order.
    std::vector<std::size_t> idx(g.ndim(), 0);
    for (std::size_t k = 0; k < g.ndim(); ++k) idx[k] = margins[k];
    while (true) {
        std::size_t flat = 0;
        for (std::size_t k = 0; k < g.ndim(); ++k) flat += idx[k] * g.stride(k);
        interior_.push_back(flat);
        std::size_t k = g.ndim();
        while (k > 0) {
            --k;
            if (++idx[k] < g.shape()[k] - margins[k]) break;
            idx[k] = margins[k];
            if (k == 0) return;
        }
    }
}

std::shared_ptr<const std::vector<double>> TermEvaluator::interior(const Term& term) const
{
    const std::string key = term.param_key();
    {
        std::lock_guard lock(mutex_);
        if (auto it = terms_.find(key); it != terms_.end()) return it->second;
    }
    std::vector<double> v(interior_.size(), 1.0);
    for (const auto& tok : term.factors()) {
        auto tv = evaluate_token(tok, cache_);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= tv[interior_[i]];
    }
    auto ptr = std::make_shared<const std::vector<double>>(std::move(v));
    std::lock_guard lock(mutex_);
    return terms_.emplace(key, std::move(ptr)).first->second;
}

std::shared_ptr<const std::vector<double>> TermEvaluator::interior(const Token& token) const
{
    return interior(Term({token}));
}

} // namespace kedisc

#include "kedisc/symnet.hpp"

#include "kedisc/errors.hpp"
#include "kedisc/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace kedisc {

std::size_t SymNetModel::n_params() const
{
    const std::size_t n = n_inputs();
    const std::size_t k = hidden_layers();
    std::size_t total = 0;
    for (std::size_t i = 0; i < k; ++i) total += (n + i + 1) + (n + 1);
    return total + n + k + 1;
}

// Layout: per layer [w_f, b_f, w_g, b_g], then [w_out, b_out].
Eigen::VectorXd SymNetModel::params() const
{
    Eigen::VectorXd p(static_cast<Eigen::Index>(n_params()));
    Eigen::Index o = 0;
    auto put = [&](const Eigen::VectorXd& v) {
        p.segment(o, v.size()) = v;
        o += v.size();
    };
    for (std::size_t i = 0; i < hidden_layers(); ++i) {
        put(w_f[i]);
        p[o++] = b_f[i];
        put(w_g[i]);
        p[o++] = b_g[i];
    }
    put(w_out);
    p[o++] = b_out;
    return p;
}

void SymNetModel::set_params(const Eigen::VectorXd& p)
{
    if (p.size() != static_cast<Eigen::Index>(n_params())) throw ConfigError("parameter vector has the wrong size");
    Eigen::Index o = 0;
    auto take = [&](Eigen::VectorXd& v) {
        v = p.segment(o, v.size());
        o += v.size();
    };
    for (std::size_t i = 0; i < hidden_layers(); ++i) {
        take(w_f[i]);
        b_f[i] = p[o++];
        take(w_g[i]);
        b_g[i] = p[o++];
    }
    take(w_out);
    b_out = p[o++];
}

SymNetModel make_symnet(std::vector<Token> inputs, std::size_t hidden_layers)
{
    SymNetModel m;
    const std::size_t n = inputs.size();
    if (n == 0) throw ConfigError("SymNet needs at least one input");
    m.inputs = std::move(inputs);
    for (std::size_t i = 0; i < hidden_layers; ++i) {
        m.w_f.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + i)));
        m.b_f.push_back(0.0);
        m.w_g.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
        m.b_g.push_back(0.0);
    }
    m.w_out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + hidden_layers));
    m.input_mean.assign(n, 0.0);
    m.input_scale.assign(n, 1.0);
    return m;
}

void randomize(SymNetModel& m, Rng& rng)
{
    auto fill = [&](Eigen::VectorXd& v) {
        const double sd = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(v.size(), 1)));
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = sd * rng.normal();
    };
    for (std::size_t i = 0; i < m.hidden_layers(); ++i) {
        fill(m.w_f[i]);
        m.b_f[i] = 0.1 * rng.normal();
        fill(m.w_g[i]);
        m.b_g[i] = 0.1 * rng.normal();
    }
    fill(m.w_out);
    m.b_out = 0.0;
}

namespace {

struct Activations {
    Eigen::MatrixXd v;
    std::vector<Eigen::VectorXd> f, g;
    Eigen::VectorXd out;
};

Activations run(const SymNetModel& m, const Eigen::MatrixXd& z)
{
    const auto n = static_cast<Eigen::Index>(m.n_inputs());
    const auto k = static_cast<Eigen::Index>(m.hidden_layers());
    if (z.cols() != n) throw ConfigError("input width does not match the network");
    Activations a;
    a.v.resize(z.rows(), n + k);
    a.v.leftCols(n) = z;
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto s = static_cast<std::size_t>(i);
        Eigen::VectorXd f = (a.v.leftCols(n + i) * m.w_f[s]).array() + m.b_f[s];
        Eigen::VectorXd g = (z * m.w_g[s]).array() + m.b_g[s];
        a.v.col(n + i) = f.cwiseProduct(g);
        a.f.push_back(std::move(f));
        a.g.push_back(std::move(g));
    }
    a.out = (a.v * m.w_out).array() + m.b_out;
    return a;
}

} // namespace

Eigen::VectorXd forward(const SymNetModel& m, const Eigen::MatrixXd& z) { return run(m, z).out; }

double huber(double w, double s)
{
    const double a = std::abs(w);
    return a > s ? a - 0.5 * s : w * w / (2.0 * s);
}

double huber_grad(double w, double s)
{
    if (w > s) return 1.0;
    if (w < -s) return -1.0;
    return w / s;
}

LossParts loss(const SymNetModel& m, const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda, double s,
               Eigen::VectorXd* grad)
{
    if (z.rows() != y.size() || y.size() == 0) throw ConfigError("inputs and target differ in length");
    const auto act = run(m, z);
    const Eigen::VectorXd r = act.out - y;
    const auto N = static_cast<double>(y.size());
    LossParts lp;
    lp.data = r.squaredNorm() / N;
    const Eigen::VectorXd p = m.params();
    for (Eigen::Index j = 0; j < p.size(); ++j) lp.reg += huber(p[j], s);
    lp.total = lp.data + lambda * lp.reg;
    if (!grad) return lp;

    const auto n = static_cast<Eigen::Index>(m.n_inputs());
    const auto k = static_cast<Eigen::Index>(m.hidden_layers());
    const Eigen::VectorXd dout = (2.0 / N) * r;
    SymNetModel gm = m;
    gm.w_out = act.v.transpose() * dout;
    gm.b_out = dout.sum();
    // Gradient with respect to each feature column, accumulated back to front.
    Eigen::MatrixXd dv = dout * m.w_out.transpose();
    for (Eigen::Index i = k - 1; i >= 0; --i) {
        const auto si = static_cast<std::size_t>(i);
        const Eigen::VectorXd dh = dv.col(n + i);
        const Eigen::VectorXd df = dh.cwiseProduct(act.g[si]);
        const Eigen::VectorXd dg = dh.cwiseProduct(act.f[si]);
        gm.w_f[si] = act.v.leftCols(n + i).transpose() * df;
        gm.b_f[si] = df.sum();
        gm.w_g[si] = z.transpose() * dg;
        gm.b_g[si] = dg.sum();
        dv.leftCols(n + i).noalias() += df * m.w_f[si].transpose();
    }
    Eigen::VectorXd g = gm.params();
    for (Eigen::Index j = 0; j < p.size(); ++j) g[j] += lambda * huber_grad(p[j], s);
    *grad = std::move(g);
    return lp;
}

TrainResult train(const SymNetModel& start, const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda,
                  const TrainSpec& spec)
{
    if (!(spec.huber_s > 0.0)) throw ConfigError("Huber threshold must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("regularization weight must be non-negative");
    if (spec.max_iters < 1 || !(spec.learning_rate > 0.0)) throw ConfigError("invalid optimizer settings");

    double lr = spec.learning_rate;
    for (int attempt = 0; attempt <= spec.max_restarts; ++attempt, lr *= 0.5) {
        SymNetModel m = start;
        Eigen::VectorXd p = m.params();
        Eigen::VectorXd vel = Eigen::VectorXd::Zero(p.size());
        Eigen::VectorXd g;
        Eigen::VectorXd best_p = p;
        LossParts best;
        best.total = std::numeric_limits<double>::infinity();
        bool diverged = false;
        for (int it = 0; it <= spec.max_iters; ++it) {
            m.set_params(p);
            const LossParts lp = loss(m, z, y, lambda, spec.huber_s, &g);
            if (!std::isfinite(lp.total) || !g.allFinite()) {
                diverged = true;
                break;
            }
            if (lp.total < best.total) {
                best = lp;
                best_p = p;
            }
            if (it == spec.max_iters) break;
            vel = spec.momentum * vel - lr * g;
            p += vel;
        }
        if (diverged) continue;
        TrainResult res;
        res.model = start;
        res.model.set_params(best_p);
        res.loss = best;
        res.restarts = attempt;
        return res;
    }
    throw TrainingError("SymNet training diverged after " + std::to_string(spec.max_restarts) + " restarts");
}

namespace {

Polynomial multiply(const Polynomial& a, const Polynomial& b)
{
    Polynomial out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            std::vector<std::size_t> m = ma;
            m.insert(m.end(), mb.begin(), mb.end());
            std::sort(m.begin(), m.end());
            out[m] += ca * cb;
        }
    return out;
}

void axpy(Polynomial& acc, double c, const Polynomial& p)
{
    for (const auto& [m, v] : p) acc[m] += c * v;
}

} // namespace

Polynomial expand(const SymNetModel& m)
{
    const std::size_t n = m.n_inputs();
    // Standardized input j as a polynomial in the raw input j.
    std::vector<Polynomial> feats;
    for (std::size_t j = 0; j < n; ++j) {
        Polynomial z;
        z[{j}] = 1.0 / m.input_scale[j];
        z[{}] = -m.input_mean[j] / m.input_scale[j];
        feats.push_back(std::move(z));
    }
    const std::vector<Polynomial> inputs = feats;
    for (std::size_t i = 0; i < m.hidden_layers(); ++i) {
        Polynomial f, g;
        f[{}] = m.b_f[i];
        g[{}] = m.b_g[i];
        for (std::size_t j = 0; j < n + i; ++j) axpy(f, m.w_f[i][static_cast<Eigen::Index>(j)], feats[j]);
        for (std::size_t j = 0; j < n; ++j) axpy(g, m.w_g[i][static_cast<Eigen::Index>(j)], inputs[j]);
        feats.push_back(multiply(f, g));
    }
    Polynomial out;
    out[{}] = m.b_out;
    for (std::size_t j = 0; j < feats.size(); ++j) axpy(out, m.w_out[static_cast<Eigen::Index>(j)], feats[j]);
    for (auto& [mono, c] : out) c *= m.output_scale;
    return out;
}

InitialGuess extract_symbolic(const SymNetModel& m, double threshold)
{
    InitialGuess g;
    g.source = "symnet";
    for (const auto& [mono, c] : expand(m)) {
        if (mono.empty()) {
            g.constant += c;
            continue;
        }
        if (std::abs(c) < threshold) continue;
        std::vector<Token> f;
        for (std::size_t j : mono) f.push_back(m.inputs[j]);
        g.add(Term(std::move(f)), c);
    }
    return g;
}

namespace {

bool pure_time_derivative(const Token& t)
{
    if (t.family != TokenFamily::Derivative) return false;
    const auto s = t.derivative_spec();
    if (s.orders.empty() || s.orders[0] < 1) return false;
    return std::all_of(s.orders.begin() + 1, s.orders.end(), [](int o) { return o == 0; });
}

Eigen::VectorXd interior_vector(const TermEvaluator& eval, const Token& t)
{
    const auto& v = *eval.interior(t);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double abs_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    const double d = ca.norm() * cb.norm();
    return d > 0.0 ? std::abs(ca.dot(cb)) / d : 0.0;
}

Token tuned_trig(const TermEvaluator& eval, const Token& t, const Eigen::VectorXd& lhs)
{
    const Grid& g = eval.field().grid();
    Token best = t;
    double best_r = -1.0;
    for (double a : trig_frequencies(g, 0))
        for (double b : trig_frequencies(g, 1)) {
            Token c = Token::trig(a, b);
            const double r = abs_corr(interior_vector(eval, c), lhs);
            if (r > best_r) {
                best_r = r;
                best = c;
            }
        }
    return best;
}

struct Attempt {
    bool ok = false;
    InitialGuess guess;
    LossParts loss;
};

Attempt fit_candidate(const TermEvaluator& eval, const std::vector<Token>& pool, const Token& lhs_tok,
                      std::size_t cand, std::size_t li, const TrainSpec& spec, double threshold)
{
    const Eigen::VectorXd y = interior_vector(eval, lhs_tok);
    std::vector<Token> inputs;
    std::vector<Eigen::VectorXd> cols;
    for (const auto& tok : pool) {
        if (tok == lhs_tok) continue;
        Token t = tok.family == TokenFamily::Trig ? tuned_trig(eval, tok, y) : tok;
        Eigen::VectorXd v = interior_vector(eval, t);
        const double mu = v.mean();
        const double sd = std::sqrt((v.array() - mu).square().mean());
        if (!(sd > 0.0) || !std::isfinite(sd)) continue;
        inputs.push_back(std::move(t));
        cols.push_back(std::move(v));
    }
    if (inputs.empty()) return {};

    SymNetModel m = make_symnet(inputs, spec.hidden_layers);
    const Eigen::Index rows = y.size();
    Eigen::MatrixXd z(rows, static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        const double mu = cols[j].mean();
        const double sd = std::sqrt((cols[j].array() - mu).square().mean());
        m.input_mean[j] = mu;
        m.input_scale[j] = sd;
        z.col(static_cast<Eigen::Index>(j)) = (cols[j].array() - mu) / sd;
    }
    const double ysd = std::sqrt((y.array() - y.mean()).square().mean());
    if (!(ysd > 0.0) || !std::isfinite(ysd)) return {};
    m.output_scale = ysd;
    const Eigen::VectorXd yz = y / ysd;

    Rng rng(derive_seed(spec.seed, cand, li));
    randomize(m, rng);
    try {
        auto tr = train(m, z, yz, spec.lambdas[li], spec);
        Attempt a;
        a.ok = true;
        a.loss = tr.loss;
        a.guess = extract_symbolic(tr.model, threshold);
        a.guess.add(Term({lhs_tok}), -1.0);
        return a;
    } catch (const TrainingError&) {
        return {};
    }
}

} // namespace

GuessResult generate_initial_guess(const TermEvaluator& eval, const std::vector<Token>& pool, const TrainSpec& spec,
                                   double threshold)
{
    if (spec.lambdas.empty()) throw ConfigError("no regularization weights to try");
    std::vector<Token> cands;
    for (const auto& t : pool)
        if (pure_time_derivative(t)) cands.push_back(t);
    if (cands.empty()) throw GuessError("token pool has no time derivative to balance");

    std::vector<std::future<Attempt>> jobs;
    for (std::size_t c = 0; c < cands.size(); ++c)
        for (std::size_t l = 0; l < spec.lambdas.size(); ++l)
            jobs.push_back(std::async(std::launch::async, fit_candidate, std::cref(eval), std::cref(pool),
                                      std::cref(cands[c]), c, l, std::cref(spec), threshold));

    GuessResult best;
    bool found = false;
    std::size_t idx = 0;
    for (std::size_t c = 0; c < cands.size(); ++c)
        for (std::size_t l = 0; l < spec.lambdas.size(); ++l, ++idx) {
            Attempt a = jobs[idx].get();
            if (!a.ok) continue;
            if (!found || a.loss.total < best.loss.total) {
                found = true;
                best.guess = std::move(a.guess);
                best.lhs = Term({cands[c]});
                best.lambda = spec.lambdas[l];
                best.loss = a.loss;
            }
        }
    if (!found) throw GuessError("SymNet training failed for every balance term");
    return best;
}

} // namespace kedisc

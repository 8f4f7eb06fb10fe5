#include "kedisc/sparsity.hpp"

#include "kedisc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kedisc {

namespace {

double soft_threshold(double z, double gamma)
{
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

// Tries the exact solution for the current support and signs. Accepts it only
// when signs agree and the inactive coordinates satisfy the KKT bound.
bool polish(const Eigen::MatrixXd& gram, const Eigen::VectorXd& q, double lambda, Eigen::VectorXd& b)
{
    const Eigen::Index p = b.size();
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < p; ++j)
        if (b[j] != 0.0) support.push_back(j);
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(p);
    if (!support.empty()) {
        const auto m = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd g(m, m);
        Eigen::VectorXd rhs(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            rhs[r] = q[support[r]] - lambda * (b[support[r]] > 0.0 ? 1.0 : -1.0);
            for (Eigen::Index c = 0; c < m; ++c) g(r, c) = gram(support[r], support[c]);
        }
        auto qr = g.colPivHouseholderQr();
        if (qr.rank() < m) return false;
        Eigen::VectorXd sol = qr.solve(rhs);
        for (Eigen::Index r = 0; r < m; ++r) {
            if (!std::isfinite(sol[r]) || sol[r] * b[support[r]] <= 0.0) return false;
            cand[support[r]] = sol[r];
        }
    }
    Eigen::VectorXd grad = q - gram * cand;
    for (Eigen::Index j = 0; j < p; ++j)
        if (cand[j] == 0.0 && std::abs(grad[j]) > lambda * (1.0 + 1e-9)) return false;
    b = cand;
    return true;
}

} // namespace

Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& target, double lambda,
                          const LassoOptions& opts)
{
    if (!(lambda > 0.0)) throw ConfigError("lasso lambda must be positive");
    if (features.rows() != target.size()) throw ConfigError("feature rows do not match target length");
    if (!features.allFinite() || !target.allFinite()) throw NumericError("non-finite value in lasso inputs");

    const Eigen::Index p = features.cols();
    Eigen::VectorXd norms = features.colwise().norm().transpose();
    Eigen::VectorXd inv_norm(p);
    for (Eigen::Index j = 0; j < p; ++j) inv_norm[j] = norms[j] > 0.0 ? 1.0 / norms[j] : 0.0;
    Eigen::MatrixXd xs = features * inv_norm.asDiagonal();

    // Covariance form: every sweep costs O(p^2) regardless of sample count.
    const Eigen::MatrixXd gram = xs.transpose() * xs;
    const Eigen::VectorXd q = xs.transpose() * target;
    const double yy = target.squaredNorm();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    if (p == 0 || yy == 0.0) return b;

    auto gap = [&] {
        const Eigen::VectorXd gb = gram * b;
        const double rr = std::max(0.0, yy - 2.0 * b.dot(q) + b.dot(gb));
        const double yr = yy - b.dot(q);
        const double corr = (q - gb).cwiseAbs().maxCoeff();
        const double s = corr > lambda ? lambda / corr : 1.0;
        const double primal = 0.5 * rr + lambda * b.lpNorm<1>();
        const double dual = s * yr - 0.5 * s * s * rr;
        return primal - dual;
    };

    const double tol = opts.gap_tol * 0.5 * yy;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double max_step = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (gram(j, j) == 0.0) continue;
            const double old = b[j];
            const double rho = q[j] - gram.row(j).dot(b) + gram(j, j) * old;
            b[j] = soft_threshold(rho, lambda) / gram(j, j);
            max_step = std::max(max_step, std::abs(b[j] - old));
        }
        Eigen::VectorXd exact = b;
        if (polish(gram, q, lambda, exact)) {
            b = exact;
            break;
        }
        if (gap() <= tol && max_step <= 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff())) break;
        if (sweep + 1 == opts.max_sweeps)
            throw ConvergenceError("lasso did not converge in " + std::to_string(opts.max_sweeps) + " sweeps");
    }
    return b.cwiseProduct(inv_norm);
}

std::size_t select_target(Chromosome& c, Rng& rng)
{
    if (c.terms.size() < 2) throw StructuralError("target selection needs at least two terms");
    c.target = rng.index(c.terms.size());
    return *c.target;
}

std::vector<double> trig_frequencies(const Grid& g, std::size_t axis)
{
    const auto [lo, hi] = g.bounds().at(axis);
    std::vector<double> out;
    for (int k = 1; k <= 5; ++k) out.push_back(k * std::numbers::pi / (hi - lo));
    return out;
}

double fitness_from_rms(double rms, double f_max)
{
    if (!(rms > 0.0)) return f_max;
    return std::min(1.0 / rms, f_max);
}

namespace {

double abs_correlation(const std::vector<double>& a, const std::vector<double>& b)
{
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return std::abs(sab) / std::sqrt(saa * sbb);
}

// Picks trig frequencies by the best absolute correlation with a reference term.
void tune_trig(Term& term, const Term& reference, const TermEvaluator& eval)
{
    for (std::size_t f = 0; f < term.size(); ++f) {
        if (term.factors()[f].family != TokenFamily::Trig) continue;
        const Grid& g = eval.field().grid();
        const auto& ref = *eval.interior(reference);
        double best = -1.0;
        Term chosen = term;
        for (double a : trig_frequencies(g, 0))
            for (double b : trig_frequencies(g, 1)) {
                Term cand = term.with_params(f, {a, b});
                double r = abs_correlation(*eval.interior(cand), ref);
                if (r > best) {
                    best = r;
                    chosen = cand;
                }
            }
        term = chosen;
    }
}

} // namespace

FitResult fit_chromosome(Chromosome& c, const TermEvaluator& eval, const FitOptions& opts)
{
    if (c.terms.size() < 2) throw StructuralError("a chromosome needs at least two terms to fit");
    if (!c.target || *c.target >= c.terms.size()) throw StructuralError("chromosome target is not selected");
    const std::size_t tgt = *c.target;
    const std::size_t nt = c.terms.size();

    for (std::size_t i = 0; i < nt; ++i) {
        if (c.terms[i].count_single_occurrence() == 0) continue;
        const Term& ref = (i == tgt) ? c.terms[tgt == 0 ? 1 : 0] : c.terms[tgt];
        tune_trig(c.terms[i], ref, eval);
    }

    const auto n = static_cast<Eigen::Index>(eval.interior_size());
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < nt; ++i)
        if (i != tgt) cols.push_back(i);
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        const auto& v = *eval.interior(c.terms[cols[k]]);
        x.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    }
    const auto& tv = *eval.interior(c.terms[tgt]);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(tv.data(), n);

    FitResult res;
    res.coefficients.assign(nt, 0.0);
    res.kept.assign(nt, false);
    res.coefficients[tgt] = -1.0;

    Eigen::VectorXd lasso = lasso_fit(x, y, opts.lambda, opts.lasso);
    std::vector<bool> active(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k)
        active[k] = std::abs(lasso[static_cast<Eigen::Index>(k)]) >= opts.prune_threshold;

    // Refit the survivors; repeat while the refit pushes some coefficient under the threshold.
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t round = 0; round <= cols.size(); ++round) {
        std::vector<Eigen::Index> idx;
        for (std::size_t k = 0; k < cols.size(); ++k)
            if (active[k]) idx.push_back(static_cast<Eigen::Index>(k));
        coef.setZero();
        if (idx.empty()) break;
        Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = x.col(idx[k]);
        Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(y);
        bool dropped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            coef[idx[k]] = sol[static_cast<Eigen::Index>(k)];
            if (!(std::abs(sol[static_cast<Eigen::Index>(k)]) >= opts.prune_threshold)) {
                active[static_cast<std::size_t>(idx[k])] = false;
                dropped = true;
            }
        }
        if (!dropped) break;
    }

    bool any = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        if (!active[k]) {
            coef[static_cast<Eigen::Index>(k)] = 0.0;
            continue;
        }
        any = true;
        res.kept[cols[k]] = true;
        res.coefficients[cols[k]] = coef[static_cast<Eigen::Index>(k)];
    }
    const double rms = (y - x * coef).norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(n, 1)));
    res.residual_norm = rms;
    res.fitness = any ? fitness_from_rms(rms, opts.f_max) : 0.0;

    c.coefficients = res.coefficients;
    c.kept = res.kept;
    c.fitness = res.fitness;
    return res;
}

} // namespace kedisc

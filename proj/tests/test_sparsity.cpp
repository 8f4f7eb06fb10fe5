#include "kedisc/errors.hpp"
#include "kedisc/sparsity.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace kedisc;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int n, int p)
{
    Eigen::MatrixXd m(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = rng.normal() * (1.0 + j);
    return m;
}

Field exp_field(double a, double b)
{
    const std::vector<std::pair<double, double>> bounds{{0.0, 1.0}, {0.0, 1.0}};
    const std::vector<std::size_t> shape{41, 41};
    const auto g = build_uniform_grid(bounds, shape);
    std::vector<double> v;
    for (double t : g.axis(0))
        for (double x : g.axis(1)) v.push_back(std::exp(a * t + b * x));
    return Field(g, v);
}

Chromosome chromosome(std::vector<std::vector<std::string>> labels, std::size_t target)
{
    Chromosome c;
    for (const auto& l : labels) c.terms.push_back(Term::from_labels(l));
    c.target = target;
    return c;
}

} // namespace

TEST_SUITE("sparsity") {

TEST_CASE("tiny lambda matches least squares")
{
    Rng rng(5);
    const auto x = random_matrix(rng, 40, 4);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y[i] = rng.normal();
    const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd c = lasso_fit(x, y, 1e-10);
    CHECK((c - ols).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("single orthonormal column soft-thresholds")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 1);
    x(0, 0) = 1.0;
    for (double beta : {2.0, -3.0, 0.05, -0.2}) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
        y[0] = beta;
        y[1] = 0.7;
        const double lambda = 0.1;
        const double expect = (beta > 0 ? 1 : -1) * std::max(std::abs(beta) - lambda, 0.0);
        CHECK(lasso_fit(x, y, lambda)[0] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("KKT conditions on random problems")
{
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_matrix(rng, 50, 5);
        Eigen::VectorXd y(50);
        for (int i = 0; i < 50; ++i) y[i] = x(i, 0) - 0.5 * x(i, 2) + rng.normal();
        const double lambda = 0.05 + rng.uniform() * 5.0;
        const auto c = lasso_fit(x, y, lambda);
        CHECK(oracle::lasso_kkt_violation(x, y, lambda, c) < 1e-5);
    }
}

TEST_CASE("coordinate descent matches the exhaustive active-set solution")
{
    Rng rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 5 + static_cast<int>(rng.index(46));
        const int p = 1 + static_cast<int>(rng.index(8));
        const auto x = random_matrix(rng, n, p);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = rng.normal() * 3.0 + x(i, 0);
        const double lambda = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
        const auto got = lasso_fit(x, y, lambda);
        const auto want = oracle::lasso_exhaustive(x, y, lambda);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("lasso input errors")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(lasso_fit(x, y, 0.0), ConfigError);
    y[1] = NAN;
    CHECK_THROWS_AS(lasso_fit(x, y, 1.0), NumericError);
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 2);
    CHECK(lasso_fit(z, Eigen::VectorXd::Ones(3), 1.0).isZero());
}

TEST_CASE("target selection is uniform")
{
    Chromosome c = chromosome({{"u"}, {"du/dx"}, {"du/dt"}}, 0);
    Rng rng(3);
    std::vector<double> counts(3, 0.0);
    for (int i = 0; i < 10000; ++i) counts[select_target(c, rng)] += 1;
    CHECK(oracle::within_3_sigma(counts, {1.0 / 3, 1.0 / 3, 1.0 / 3}));

    Rng a(9), b(9);
    Chromosome c1 = c, c2 = c;
    CHECK(select_target(c1, a) == select_target(c2, b));

    Chromosome one = chromosome({{"u"}}, 0);
    CHECK_THROWS_AS(select_target(one, rng), StructuralError);
}

TEST_CASE("fit recovers an exact transport equation")
{
    // u = x / (1 + t) solves u_t + u u_x = 0; linear in x, so u_xx vanishes.
    const std::vector<std::pair<double, double>> b{{0.0, 1.0}, {-1.0, 1.0}};
    const std::vector<std::size_t> s{201, 41};
    const auto g = build_uniform_grid(b, s);
    std::vector<double> v;
    for (double t : g.axis(0))
        for (double x : g.axis(1)) v.push_back(x / (1.0 + t));
    TermEvaluator eval(Field(g, v), interior_margins({1, 2}));
    auto c = chromosome({{"du/dt"}, {"u", "du/dx"}, {"d^2u/dx^2"}}, 0);
    const auto r = fit_chromosome(c, eval);
    CHECK(r.kept[1]);
    CHECK_FALSE(r.kept[2]);
    CHECK(r.coefficients[0] == -1.0);
    CHECK(r.coefficients[1] == doctest::Approx(-1.0).epsilon(2e-2));
    CHECK(r.coefficients[2] == 0.0);
    CHECK(r.fitness == doctest::Approx(1.0 / r.residual_norm));
    CHECK(c.fitness == r.fitness);
}

TEST_CASE("fitness is capped for exact fits")
{
    CHECK(fitness_from_rms(0.0, 1e12) == 1e12);
    CHECK(fitness_from_rms(1e-20, 1e12) == 1e12);
    CHECK(fitness_from_rms(0.5, 1e12) == 2.0);

    // u = exp(x): u_x equals u up to the FD error.
    TermEvaluator eval(exp_field(0.0, 1.0), {1, 1});
    auto c = chromosome({{"u"}, {"du/dx"}}, 0);
    const auto r = fit_chromosome(c, eval);
    CHECK(r.fitness <= 1e12);
    CHECK(r.fitness > 1e3);
}

TEST_CASE("collinear terms do not break the fit")
{
    // u = exp(t + 2x): u_x is (up to FD error) 2 u, so u and u_x are collinear.
    TermEvaluator eval(exp_field(1.0, 2.0), {1, 1});
    auto c = chromosome({{"du/dt"}, {"u"}, {"du/dx"}}, 0);
    const auto r = fit_chromosome(c, eval);
    CHECK(r.kept[1] != r.kept[2]);
    CHECK(std::isfinite(r.fitness));
    CHECK(r.fitness > 0.0);
}

TEST_CASE("fitness decreases with residual")
{
    double prev = fitness_from_rms(1e-9, 1e12);
    for (double rms = 1e-8; rms < 1e3; rms *= 3) {
        const double f = fitness_from_rms(rms, 1e12);
        CHECK(f <= prev);
        prev = f;
    }
}

TEST_CASE("fit errors")
{
    TermEvaluator eval(exp_field(1.0, 1.0), {1, 1});
    auto c = chromosome({{"u"}, {"du/dx"}}, 0);
    c.target.reset();
    CHECK_THROWS_AS(fit_chromosome(c, eval), StructuralError);
}

TEST_CASE("trig frequency grid")
{
    const std::vector<std::pair<double, double>> b{{0.0, 2.0}, {-1.0, 1.0}};
    const std::vector<std::size_t> s{5, 5};
    const auto g = build_uniform_grid(b, s);
    const auto f = trig_frequencies(g, 1);
    REQUIRE(f.size() == 5);
    for (int k = 1; k <= 5; ++k) CHECK(f[k - 1] == doctest::Approx(k * M_PI / 2.0));
}

}

#include "kedisc/errors.hpp"
#include "kedisc/field.hpp"
#include "kedisc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

using namespace kedisc;

namespace {

Grid grid2(std::pair<double, double> t, std::size_t nt, std::pair<double, double> x, std::size_t nx)
{
    const std::vector<std::pair<double, double>> b{t, x};
    const std::vector<std::size_t> s{nt, nx};
    return build_uniform_grid(b, s);
}

Grid grid1(double lo, double hi, std::size_t n)
{
    const std::vector<std::pair<double, double>> b{{lo, hi}};
    const std::vector<std::size_t> s{n};
    return build_uniform_grid(b, s);
}

template <typename F>
Field sample(const Grid& g, F fn)
{
    std::vector<double> v;
    v.reserve(g.size());
    if (g.ndim() == 1) {
        for (double t : g.axis(0)) v.push_back(fn(t, 0.0));
    } else {
        for (double t : g.axis(0))
            for (double x : g.axis(1)) v.push_back(fn(t, x));
    }
    return Field(g, std::move(v));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_SUITE("field") {

TEST_CASE("uniform grid spacing")
{
    const auto g = grid2({0, 1}, 101, {0, 1}, 101);
    CHECK(g.spacing()[0] == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(g.spacing()[1] == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(g.shape() == std::vector<std::size_t>{101, 101});

    const auto burgers = grid2({-8, 8}, 256, {0, 10}, 101);
    CHECK(burgers.spacing()[0] == doctest::Approx(16.0 / 255.0).epsilon(1e-12));
    CHECK(burgers.spacing()[1] == doctest::Approx(0.1).epsilon(1e-12));

    const auto two = grid1(0, 1, 2);
    CHECK(two.axis(0) == std::vector<double>{0.0, 1.0});
    CHECK(two.axis(0).back() == 1.0);
}

TEST_CASE("grid rejects bad bounds and counts")
{
    CHECK_THROWS_AS(grid1(1, 0, 5), ConfigError);
    CHECK_THROWS_AS(grid1(0, 1, 1), ConfigError);
    CHECK_THROWS_AS(grid1(0, 1, 0), ConfigError);
    CHECK_THROWS_AS(Grid({{0.0, 0.1, 0.3}}), ConfigError);
}

TEST_CASE("field rejects non-finite values and shape mismatch")
{
    const auto g = grid1(0, 1, 3);
    CHECK_THROWS_AS(Field(g, {0.0, NAN, 1.0}), NumericError);
    CHECK_THROWS_AS(Field(g, {0.0, 1.0}), ConfigError);
}

TEST_CASE("second-order stencils are exact on quadratics")
{
    const auto g = grid1(0, 1, 11);
    const auto f = sample(g, [](double x, double) { return x * x; });
    const auto d = differentiate(f, {{1}});
    const auto exact = sample(g, [](double x, double) { return 2 * x; });
    CHECK(max_abs_diff(d.values(), exact.values()) < 1e-10);
}

TEST_CASE("second derivative of sine")
{
    const auto g = grid1(0, 1, 101);
    const auto f = sample(g, [](double x, double) { return std::sin(x); });
    const auto d = differentiate(f, {{2}});
    const auto exact = sample(g, [](double x, double) { return -std::sin(x); });
    CHECK(max_abs_diff(d.values(), exact.values()) < 1e-3);
}

TEST_CASE("zeroth derivative is the identity")
{
    const auto g = grid2({0, 1}, 7, {0, 2}, 9);
    const auto f = sample(g, [](double t, double x) { return std::exp(t) * std::cos(x); });
    CHECK(differentiate(f, {{0, 0}}).values() == f.values());
}

TEST_CASE("orders beyond the stencil support are rejected")
{
    const auto g = grid1(0, 1, 20);
    const auto f = sample(g, [](double x, double) { return x; });
    CHECK_THROWS_AS(differentiate(f, {{kMaxDerivativeOrder + 1}}), UnsupportedOrderError);
}

TEST_CASE("fd weights reproduce the classical centred stencils")
{
    const std::vector<int> offs{-1, 0, 1};
    const auto w1 = fd_weights(offs, 1);
    CHECK(w1[0] == doctest::Approx(-0.5));
    CHECK(w1[1] == doctest::Approx(0.0));
    CHECK(w1[2] == doctest::Approx(0.5));
    const auto w2 = fd_weights(offs, 2);
    CHECK(w2[0] == doctest::Approx(1.0));
    CHECK(w2[1] == doctest::Approx(-2.0));
    CHECK(w2[2] == doctest::Approx(1.0));
    const std::vector<int> fwd{0, 1, 2};
    const auto wf = fd_weights(fwd, 1);
    CHECK(wf[0] == doctest::Approx(-1.5));
    CHECK(wf[1] == doctest::Approx(2.0));
    CHECK(wf[2] == doctest::Approx(-0.5));
}

TEST_CASE("differentiation is linear")
{
    const auto g = grid2({0, 1}, 21, {0, 3}, 31);
    const auto f = sample(g, [](double t, double x) { return std::sin(x + t) * std::exp(-t); });
    const auto h = sample(g, [](double t, double x) { return x * x * x + t * x; });
    const double a = 2.5, b = -0.75;
    std::vector<double> comb(f.size());
    for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = a * f.values()[i] + b * h.values()[i];
    const Field fc(g, comb);
    for (const auto& spec : {DerivativeSpec{{1, 0}}, DerivativeSpec{{0, 2}}, DerivativeSpec{{1, 1}}}) {
        const auto dc = differentiate(fc, spec);
        const auto df = differentiate(f, spec);
        const auto dh = differentiate(h, spec);
        double m = 0.0;
        for (std::size_t i = 0; i < comb.size(); ++i)
            m = std::max(m, std::abs(dc.values()[i] - (a * df.values()[i] + b * dh.values()[i])));
        CHECK(m < 1e-10);
    }
}

TEST_CASE("mixed partials of a polynomial")
{
    // u = t^2 x^2 + t x: u_tx = 4 t x + 1, exactly reproduced by second-order stencils.
    const auto g = grid2({0, 1}, 11, {0, 2}, 21);
    const auto f = sample(g, [](double t, double x) { return t * t * x * x + t * x; });
    const auto d = differentiate(f, {{1, 1}});
    const auto exact = sample(g, [](double t, double x) { return 4 * t * x + 1; });
    CHECK(max_abs_diff(d.values(), exact.values()) < 1e-9);
}

TEST_CASE("smoothing reproduces cubics and window 1 is the identity")
{
    const auto g = grid2({0, 1}, 15, {-1, 1}, 17);
    const auto f = sample(g, [](double t, double x) { return 1 + t - 2 * x * x + x * x * x * t; });
    CHECK(max_abs_diff(smooth(f, 5, 3).values(), f.values()) < 1e-8);
    CHECK(smooth(f, 1, 3).values() == f.values());
    CHECK_THROWS_AS(smooth(f, 4, 2), ConfigError);
    CHECK_THROWS_AS(smooth(f, 19, 3), ConfigError);
}

TEST_CASE("smoothing reduces noise on a sine")
{
    const auto g = grid1(0, 6.283185307179586, 201);
    const auto clean = sample(g, [](double x, double) { return std::sin(x); });
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        std::vector<double> v = clean.values();
        for (double& x : v) x += 0.05 * rng.normal();
        const auto s = smooth(Field(g, v), 9, 3);
        double e_in = 0.0, e_out = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            e_in += std::pow(v[i] - clean.values()[i], 2);
            e_out += std::pow(s.values()[i] - clean.values()[i], 2);
        }
        if (e_out < e_in) ++improved;
    }
    CHECK(improved == 100);
}

TEST_CASE("noise model")
{
    const auto g = grid2({0, 1}, 100, {0, 1}, 100);
    const Field c(g, std::vector<double>(g.size(), 10.0));
    CHECK(add_noise(c, 0.0, 3).values() == c.values());
    CHECK_THROWS_AS(add_noise(c, -0.1, 3), ConfigError);

    const auto n = add_noise(c, 0.1, 7);
    double mean = 0.0, var = 0.0;
    for (double v : n.values()) mean += v - 10.0;
    mean /= static_cast<double>(n.size());
    for (double v : n.values()) var += std::pow(v - 10.0 - mean, 2);
    const double sd = std::sqrt(var / static_cast<double>(n.size() - 1));
    CHECK(sd >= 0.97);
    CHECK(sd <= 1.03);

    std::vector<double> z(g.size(), 0.0);
    z[5] = 1.0;
    const auto nz = add_noise(Field(g, z), 0.1, 1);
    CHECK(nz.values()[0] == 0.0);
    CHECK(nz.values()[6] == 0.0);
}

TEST_CASE("noise is reproducible per seed and independent across seeds")
{
    const auto g = grid2({0, 1}, 100, {0, 1}, 100);
    const Field c(g, std::vector<double>(g.size(), 1.0));
    CHECK(add_noise(c, 0.2, 42).values() == add_noise(c, 0.2, 42).values());
    const auto a = add_noise(c, 0.2, 1).values();
    const auto b = add_noise(c, 0.2, 2).values();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.05);
}

TEST_CASE("derivative cache returns the same result as direct differentiation")
{
    const auto g = grid2({0, 1}, 11, {0, 1}, 13);
    const auto f = sample(g, [](double t, double x) { return std::sin(3 * x) * t; });
    DerivativeCache cache(f);
    const auto a = cache.get({{0, 2}});
    const auto b = cache.get({{0, 2}});
    CHECK(a.get() == b.get());
    CHECK(a->values() == differentiate(f, {{0, 2}}).values());
}

}

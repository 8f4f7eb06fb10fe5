#include "kedisc/datasets.hpp"

#include "kedisc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace kedisc {

using nlohmann::json;

std::vector<Term> GroundTruth::all_terms() const
{
    std::vector<Term> out{lhs};
    for (const auto& [t, c] : terms) out.push_back(t);
    return out;
}

namespace {

Term term_of(std::initializer_list<const char*> labels)
{
    std::vector<std::string> l(labels.begin(), labels.end());
    return Term::from_labels(l);
}

} // namespace

Dataset gen_viscous_burgers()
{
    constexpr double nu = 0.1;
    const std::array<std::pair<double, double>, 2> bounds{{{0.0, 10.0}, {-8.0, 8.0}}};
    const std::array<std::size_t, 2> shape{101, 256};
    auto grid = std::make_shared<const Grid>(build_uniform_grid(bounds, shape));
    const auto& ts = grid->axis(0);
    const auto& xs = grid->axis(1);

    // Cole-Hopf: u = (w/t) * int z e(z) dz / int e(z) dz with y = x - w z,
    // w = sqrt(4 nu t), e(z) = exp(-z^2 - F(y) / (2 nu)), F' = u0 = exp(-y^2 / 2).
    constexpr int nq = 1201;
    constexpr double zmax = 12.0;
    const double dz = 2.0 * zmax / (nq - 1);
    const double root_half_pi = std::sqrt(0.5 * 3.14159265358979323846);
    const double inv_root2 = 1.0 / std::sqrt(2.0);
    std::vector<double> values(grid->size());
    std::vector<double> expo(nq);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double x = xs[j];
            if (t == 0.0) {
                values[j] = std::exp(-0.5 * x * x);
                continue;
            }
            const double w = std::sqrt(4.0 * nu * t);
            double emax = -std::numeric_limits<double>::infinity();
            for (int q = 0; q < nq; ++q) {
                const double z = -zmax + q * dz;
                const double y = x - w * z;
                expo[q] = -z * z - root_half_pi * std::erf(y * inv_root2) / (2.0 * nu);
                emax = std::max(emax, expo[q]);
            }
            double num = 0.0, den = 0.0;
            for (int q = 0; q < nq; ++q) {
                const double z = -zmax + q * dz;
                const double e = std::exp(expo[q] - emax);
                num += z * e;
                den += e;
            }
            values[i * xs.size() + j] = (w / t) * num / den;
        }
    }
    GroundTruth truth{{{term_of({"u", "du/dx"}), -1.0}, {term_of({"d^2u/dx^2"}), 0.1}}, term_of({"du/dt"})};
    return {Field(grid, std::move(values), "u"), std::move(truth), {}};
}

SolitonSample kdv_soliton_at(double x, double t, double c, double x0)
{
    const double rc = std::sqrt(c);
    const double s = 0.5 * rc * (x - c * t - x0);
    const double ch = std::cosh(s);
    const double sech2 = 1.0 / (ch * ch);
    const double th = std::tanh(s);
    SolitonSample r{};
    r.u = 0.5 * c * sech2;
    r.u_x = -0.5 * c * rc * sech2 * th;
    r.u_t = -c * r.u_x;
    r.u_xxx = 0.25 * c * c * rc * sech2 * th * (6.0 * sech2 - 2.0);
    return r;
}

Dataset gen_kdv_soliton()
{
    const std::array<std::pair<double, double>, 2> bounds{{{0.0, 20.0}, {-30.0, 30.0}}};
    const std::array<std::size_t, 2> shape{201, 512};
    auto grid = std::make_shared<const Grid>(build_uniform_grid(bounds, shape));
    const auto& ts = grid->axis(0);
    const auto& xs = grid->axis(1);
    std::vector<double> values(grid->size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) values[i * xs.size() + j] = kdv_soliton_at(xs[j], ts[i]).u;
    GroundTruth truth{{{term_of({"u", "du/dx"}), -6.0}, {term_of({"d^3u/dx^3"}), -1.0}}, term_of({"du/dt"})};
    return {Field(grid, std::move(values), "u"), std::move(truth), {}};
}

Dataset gen_wave()
{
    // d'Alembert with odd 2-periodic extensions of the initial data (the
    // reflection of u(0,t) = u(1,t) = 0):
    // u = (F(x - ct) + F(x + ct)) / 2 + (H(x + ct) - H(x - ct)) / (2c),
    // with H an antiderivative of the extended initial velocity.
    constexpr double c = 0.2;
    constexpr std::size_t n = 101;
    auto profile = [](double x) {
        double s = std::sin(0.1 * x * (x - 1.0));
        return s * s;
    };
    auto reduce = [](double x) {
        double y = std::fmod(x, 2.0);
        return y < 0.0 ? y + 2.0 : y;
    };
    auto displacement = [&](double x) {
        double y = reduce(x);
        return y <= 1.0 ? 1e4 * profile(y) : -1e4 * profile(2.0 - y);
    };
    // Integral of 1e3 * profile over [0, s], composite Simpson (smooth integrand).
    auto velocity_integral = [&](double s) {
        constexpr int m = 400;
        if (s <= 0.0) return 0.0;
        const double h = s / m;
        double acc = profile(0.0) + profile(s);
        for (int k = 1; k < m; ++k) acc += (k % 2 ? 4.0 : 2.0) * profile(k * h);
        return 1e3 * acc * h / 3.0;
    };
    auto antiderivative = [&](double x) {
        double y = reduce(x);
        return velocity_integral(y <= 1.0 ? y : 2.0 - y);
    };

    const std::array<std::pair<double, double>, 2> bounds{{{0.0, 1.0}, {0.0, 1.0}}};
    const std::array<std::size_t, 2> shape{n, n};
    auto grid = std::make_shared<const Grid>(build_uniform_grid(bounds, shape));
    const auto& ts = grid->axis(0);
    const auto& xs = grid->axis(1);
    std::vector<double> values(grid->size());
    for (std::size_t i = 0; i < n; ++i) {
        const double ct = c * ts[i];
        for (std::size_t j = 0; j < n; ++j) {
            const double x = xs[j];
            double u = 0.5 * (displacement(x - ct) + displacement(x + ct));
            if (ct > 0.0) u += (antiderivative(x + ct) - antiderivative(x - ct)) / (2.0 * c);
            values[i * n + j] = u;
        }
    }
    for (std::size_t i = 0; i < n; ++i) values[i * n] = values[i * n + n - 1] = 0.0;
    for (std::size_t j = 0; j < n; ++j) values[j] = (j == 0 || j == n - 1) ? 0.0 : 1e4 * profile(xs[j]);

    // The initial data do not satisfy u_xx = 0 at the walls, so second
    // derivatives jump across the characteristics x = ct and x = 1 - ct.
    std::vector<bool> regular(grid->size(), true);
    const double hx = grid->spacing()[1];
    const double ht = grid->spacing()[0];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double x = xs[j];
            const double ct = c * ts[i];
            const double reach = hx + c * ht + 1e-12;
            if (std::abs(x - ct) <= reach || std::abs(1.0 - x - ct) <= reach) regular[i * n + j] = false;
        }

    GroundTruth truth{{{term_of({"d^2u/dx^2"}), c * c}}, term_of({"d^2u/dt^2"})};
    Dataset d{Field(grid, std::move(values), "u"), std::move(truth), {}};
    d.regular = std::move(regular);
    return d;
}

Field inviscid_burgers_field(const Grid& grid)
{
    if (grid.ndim() != 2) throw ConfigError("inviscid Burgers generator needs a (t, x) grid");
    auto f = [](double x) { return 500.0 * (1.0 - std::tanh(x / 500.0)); };
    auto df = [](double x) {
        double ch = std::cosh(x / 500.0);
        return -1.0 / (ch * ch);
    };
    const auto& ts = grid.axis(0);
    const auto& xs = grid.axis(1);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double x = xs[j];
            double u = f(x);
            auto residual = [&](double v) { return v - f(x - v * t); };
            double g = residual(u);
            bool converged = std::abs(g) < 1e-11;
            for (int it = 0; it < 100 && !converged; ++it) {
                const double dg = 1.0 + t * df(x - u * t);
                if (!(dg > 0.0)) break;
                double step = g / dg;
                double lambda = 1.0;
                double trial = u - step;
                double gt = residual(trial);
                while (std::abs(gt) > std::abs(g) && lambda > 1e-8) {
                    lambda *= 0.5;
                    trial = u - lambda * step;
                    gt = residual(trial);
                }
                u = trial;
                g = gt;
                converged = std::abs(g) < 1e-11;
            }
            if (!converged)
                throw GenerationError("characteristics solve did not converge at t = " + std::to_string(t) +
                                      ", x = " + std::to_string(x) + " (past shock formation?)");
            values[i * xs.size() + j] = u;
        }
    }
    return Field(grid, std::move(values), "u");
}

Dataset gen_inviscid_burgers()
{
    // Shock forms at t = 1; the window stops well before it.
    const std::array<std::pair<double, double>, 2> bounds{{{0.0, 0.4}, {-2000.0, 2000.0}}};
    const std::array<std::size_t, 2> shape{101, 101};
    GroundTruth truth{{{term_of({"u", "du/dx"}), -1.0}}, term_of({"du/dt"})};
    return {inviscid_burgers_field(build_uniform_grid(bounds, shape)), std::move(truth), {}};
}

std::vector<std::string> builtin_equations() { return {"viscous-burgers", "kdv", "wave", "inviscid-burgers"}; }

Dataset generate(const std::string& equation_id)
{
    if (equation_id == "viscous-burgers") return gen_viscous_burgers();
    if (equation_id == "kdv") return gen_kdv_soliton();
    if (equation_id == "wave") return gen_wave();
    if (equation_id == "inviscid-burgers") return gen_inviscid_burgers();
    throw ConfigError("unknown equation id '" + equation_id + "'");
}

void save_field(const Field& f, const std::string& values_path, const std::string& meta_path)
{
    const Grid& g = f.grid();
    if (g.ndim() > 2) throw ConfigError("CSV export supports at most one spatial axis");
    std::ofstream out(values_path);
    if (!out) throw IngestionError("cannot write " + values_path);
    const std::size_t cols = g.ndim() == 2 ? g.shape()[1] : 1;
    const std::size_t rows = g.shape()[0];
    char buf[40];
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", f.values()[i * cols + j]);
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
    json meta;
    meta["bounds"] = json::array();
    for (auto [lo, hi] : g.bounds()) meta["bounds"].push_back({lo, hi});
    meta["shape"] = g.shape();
    meta["name"] = f.name();
    std::ofstream m(meta_path);
    if (!m) throw IngestionError("cannot write " + meta_path);
    m << meta.dump(2) << '\n';
}

Field load_csv(const std::string& values_path, const std::string& meta_path)
{
    std::ifstream m(meta_path);
    if (!m) throw IngestionError("cannot open metadata " + meta_path);
    json meta;
    try {
        m >> meta;
    } catch (const json::exception& e) {
        throw IngestionError(meta_path + ": malformed JSON: " + e.what());
    }
    for (const char* key : {"bounds", "shape", "name"})
        if (!meta.contains(key)) throw IngestionError(meta_path + ": missing metadata key '" + key + "'");

    std::vector<std::pair<double, double>> bounds;
    std::vector<std::size_t> shape;
    try {
        for (const auto& b : meta["bounds"]) bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
        shape = meta["shape"].get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw IngestionError(meta_path + ": bad bounds/shape: " + e.what());
    }
    if (shape.empty() || shape.size() > 2 || bounds.size() != shape.size())
        throw IngestionError(meta_path + ": bounds and shape must describe 1 or 2 axes");

    std::ifstream in(values_path);
    if (!in) throw IngestionError("cannot open " + values_path);
    const std::size_t want_cols = shape.size() == 2 ? shape[1] : 1;
    std::vector<double> values;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        std::size_t col = 0;
        std::size_t start = 0;
        while (true) {
            std::size_t end = line.find(',', start);
            std::string cell = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
            ++col;
            const char* b = cell.c_str();
            while (*b == ' ' || *b == '\t') ++b;
            char* e = nullptr;
            errno = 0;
            double v = std::strtod(b, &e);
            while (e && (*e == ' ' || *e == '\t')) ++e;
            if (e == b || *e != '\0' || errno == ERANGE)
                throw IngestionError(values_path + ": non-numeric cell at row " + std::to_string(row) + ", column " +
                                     std::to_string(col) + ": '" + cell + "'");
            values.push_back(v);
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (col != want_cols)
            throw IngestionError(values_path + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                                 " columns, metadata shape expects " + std::to_string(want_cols));
    }
    if (row != shape[0])
        throw IngestionError(values_path + ": " + std::to_string(row) + " rows, metadata shape expects " +
                             std::to_string(shape[0]));
    Grid g = build_uniform_grid(bounds, shape);
    return Field(g, std::move(values), meta["name"].get<std::string>());
}

void save_truth(const GroundTruth& truth, const std::string& path)
{
    json j;
    j["lhs"] = truth.lhs.labels();
    j["terms"] = json::array();
    for (const auto& [t, c] : truth.terms) j["terms"].push_back({{"factors", t.labels()}, {"coefficient", c}});
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    out << j.dump(2) << '\n';
}

GroundTruth load_truth(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path);
    try {
        json j;
        in >> j;
        GroundTruth t;
        t.lhs = Term::from_labels(j.at("lhs").get<std::vector<std::string>>());
        for (const auto& e : j.at("terms"))
            t.terms.emplace_back(Term::from_labels(e.at("factors").get<std::vector<std::string>>()),
                                 e.at("coefficient").get<double>());
        return t;
    } catch (const json::exception& e) {
        throw IngestionError(path + ": " + e.what());
    }
}

void save_dataset(const Dataset& d, const std::string& dir)
{
    std::filesystem::create_directories(dir);
    const std::filesystem::path p(dir);
    save_field(d.field, (p / "field.csv").string(), (p / "field.json").string());
    save_truth(d.truth, (p / "truth.json").string());
}

} // namespace kedisc

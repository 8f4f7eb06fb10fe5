#include "kedisc/field.hpp"

#include "kedisc/errors.hpp"
#include "kedisc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kedisc {

Grid::Grid(std::vector<std::vector<double>> axes) : axes_(std::move(axes))
{
    if (axes_.empty()) throw ConfigError("grid needs at least one axis");
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        const auto& a = axes_[k];
        if (a.size() < 2) throw ConfigError("grid axis " + std::to_string(k) + " needs at least 2 points");
        double h = (a.back() - a.front()) / static_cast<double>(a.size() - 1);
        if (!(h > 0.0)) throw ConfigError("grid axis " + std::to_string(k) + " is not increasing");
        for (std::size_t i = 1; i < a.size(); ++i) {
            double step = a[i] - a[i - 1];
            if (!(step > 0.0)) throw ConfigError("grid axis " + std::to_string(k) + " is not strictly increasing");
            if (std::abs(step - h) > 1e-12 * std::max(std::abs(h), std::abs(a[i])) + 1e-12 * h)
                throw ConfigError("grid axis " + std::to_string(k) + " is not uniformly spaced");
        }
        shape_.push_back(a.size());
        spacing_.push_back(h);
    }
}

std::size_t Grid::size() const
{
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t Grid::stride(std::size_t k) const
{
    std::size_t s = 1;
    for (std::size_t j = k + 1; j < shape_.size(); ++j) s *= shape_[j];
    return s;
}

std::vector<std::pair<double, double>> Grid::bounds() const
{
    std::vector<std::pair<double, double>> b;
    for (const auto& a : axes_) b.emplace_back(a.front(), a.back());
    return b;
}

Grid build_uniform_grid(std::span<const std::pair<double, double>> bounds, std::span<const std::size_t> shape)
{
    if (bounds.size() != shape.size() || bounds.empty())
        throw ConfigError("bounds and shape must have the same non-zero length");
    std::vector<std::vector<double>> axes;
    for (std::size_t k = 0; k < bounds.size(); ++k) {
        auto [lo, hi] = bounds[k];
        if (shape[k] < 2) throw ConfigError("axis " + std::to_string(k) + ": point count must be at least 2");
        if (!(lo < hi)) throw ConfigError("axis " + std::to_string(k) + ": bounds are inverted or empty");
        std::vector<double> a(shape[k]);
        const double n1 = static_cast<double>(shape[k] - 1);
        for (std::size_t i = 0; i < shape[k]; ++i) {
            // Interpolating form keeps both endpoints exact.
            double s = static_cast<double>(i) / n1;
            a[i] = lo * (1.0 - s) + hi * s;
        }
        a.front() = lo;
        a.back() = hi;
        axes.push_back(std::move(a));
    }
    return Grid(std::move(axes));
}

Field::Field(std::shared_ptr<const Grid> grid, std::vector<double> values, std::string name)
    : grid_(std::move(grid)), values_(std::move(values)), name_(std::move(name))
{
    if (!grid_) throw ConfigError("field without grid");
    if (values_.size() != grid_->size())
        throw ConfigError("field '" + name_ + "' has " + std::to_string(values_.size()) + " values, grid has " +
                          std::to_string(grid_->size()));
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (!std::isfinite(values_[i]))
            throw NumericError("field '" + name_ + "' has a non-finite value at flat index " + std::to_string(i));
}

Field::Field(const Grid& grid, std::vector<double> values, std::string name)
    : Field(std::make_shared<const Grid>(grid), std::move(values), std::move(name))
{
}

int DerivativeSpec::total() const { return std::accumulate(orders.begin(), orders.end(), 0); }

std::vector<double> fd_weights(std::span<const int> offsets, int order)
{
    // Fornberg (1988), evaluation point z = 0.
    const int n = static_cast<int>(offsets.size()) - 1;
    std::vector<std::vector<double>> c(offsets.size(), std::vector<double>(order + 1, 0.0));
    double c1 = 1.0;
    double c4 = offsets[0];
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        double c5 = c4;
        c4 = offsets[i];
        for (int j = 0; j < i; ++j) {
            double c3 = static_cast<double>(offsets[i] - offsets[j]);
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(offsets.size());
    for (std::size_t i = 0; i < offsets.size(); ++i) w[i] = c[i][order];
    return w;
}

namespace {

struct Stencil {
    std::vector<int> offsets;
    std::vector<double> weights;
};

// One stencil per grid position along an axis of length n.
std::vector<Stencil> derivative_stencils(std::size_t n, int order, double h)
{
    const int half = (order + 1) / 2;
    const int one_sided = order + 2;
    if (static_cast<int>(n) < std::max(one_sided, 2 * half + 1))
        throw ConfigError("axis with " + std::to_string(n) + " points is too short for a derivative of order " +
                          std::to_string(order));
    const double scale = std::pow(h, -order);
    std::vector<Stencil> out(n);
    std::vector<int> central(2 * half + 1);
    std::iota(central.begin(), central.end(), -half);
    auto central_w = fd_weights(central, order);
    for (auto& w : central_w) w *= scale;
    const int ni = static_cast<int>(n);
    for (int i = 0; i < ni; ++i) {
        if (i - half >= 0 && i + half <= ni - 1) {
            out[i] = {central, central_w};
            continue;
        }
        int start = (i - half < 0) ? 0 : ni - one_sided;
        std::vector<int> offs(one_sided);
        for (int r = 0; r < one_sided; ++r) offs[r] = start + r - i;
        auto w = fd_weights(offs, order);
        for (auto& x : w) x *= scale;
        out[i] = {std::move(offs), std::move(w)};
    }
    return out;
}

// Applies a per-position linear stencil along axis k of a row-major array.
std::vector<double> apply_along_axis(const std::vector<double>& in, const std::vector<std::size_t>& shape,
                                     std::size_t k, const std::vector<Stencil>& stencils)
{
    std::size_t stride = 1;
    for (std::size_t j = k + 1; j < shape.size(); ++j) stride *= shape[j];
    const std::size_t n = shape[k];
    const std::size_t outer = in.size() / (n * stride);
    std::vector<double> out(in.size(), 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < stride; ++s) {
            const std::size_t base = o * n * stride + s;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& st = stencils[i];
                double acc = 0.0;
                for (std::size_t r = 0; r < st.offsets.size(); ++r) {
                    auto idx = static_cast<std::ptrdiff_t>(i) + st.offsets[r];
                    acc += st.weights[r] * in[base + static_cast<std::size_t>(idx) * stride];
                }
                out[base + i * stride] = acc;
            }
        }
    }
    return out;
}

} // namespace

Field differentiate(const Field& f, const DerivativeSpec& spec)
{
    const Grid& g = f.grid();
    if (spec.orders.size() != g.ndim())
        throw ConfigError("derivative spec has " + std::to_string(spec.orders.size()) + " axes, field has " +
                          std::to_string(g.ndim()));
    for (int o : spec.orders) {
        if (o < 0) throw ConfigError("negative derivative order");
        if (o > kMaxDerivativeOrder)
            throw UnsupportedOrderError("derivative order " + std::to_string(o) + " exceeds supported maximum " +
                                        std::to_string(kMaxDerivativeOrder));
    }
    if (spec.is_identity()) return f;
    std::vector<double> v = f.values();
    for (std::size_t k = 0; k < g.ndim(); ++k) {
        if (spec.orders[k] == 0) continue;
        auto st = derivative_stencils(g.shape()[k], spec.orders[k], g.spacing()[k]);
        v = apply_along_axis(v, g.shape(), k, st);
    }
    return Field(f.grid_ptr(), std::move(v), f.name());
}

Field smooth(const Field& f, int window, int degree)
{
    if (window == 1) return f;
    if (window < 1 || window % 2 == 0) throw ConfigError("smoothing window must be a positive odd integer");
    if (degree < 0 || window < degree + 2) throw ConfigError("smoothing window must be at least degree + 2");
    const Grid& g = f.grid();
    for (std::size_t k = 0; k < g.ndim(); ++k)
        if (static_cast<std::size_t>(window) > g.shape()[k])
            throw ConfigError("smoothing window larger than axis " + std::to_string(k));

    const int half = window / 2;
    std::vector<double> v = f.values();
    for (std::size_t k = 0; k < g.ndim(); ++k) {
        const int n = static_cast<int>(g.shape()[k]);
        std::vector<Stencil> stencils(n);
        for (int i = 0; i < n; ++i) {
            int start = std::clamp(i - half, 0, n - window);
            Eigen::MatrixXd a(window, degree + 1);
            std::vector<int> offs(window);
            for (int r = 0; r < window; ++r) {
                offs[r] = start + r - i;
                double p = 1.0;
                for (int c = 0; c <= degree; ++c) {
                    a(r, c) = p;
                    p *= offs[r];
                }
            }
            // Row 0 of the pseudo-inverse gives the fitted value at offset 0.
            Eigen::MatrixXd pinv = a.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
            std::vector<double> w(window);
            for (int r = 0; r < window; ++r) w[r] = pinv(0, r);
            stencils[i] = {std::move(offs), std::move(w)};
        }
        v = apply_along_axis(v, g.shape(), k, stencils);
    }
    return Field(f.grid_ptr(), std::move(v), f.name());
}

Field add_noise(const Field& f, double magnitude, std::uint64_t seed)
{
    if (!(magnitude >= 0.0)) throw ConfigError("noise magnitude must be non-negative");
    if (magnitude == 0.0) return f;
    Rng rng(seed);
    std::vector<double> v = f.values();
    for (auto& x : v) {
        double eps = rng.normal();
        x += eps * magnitude * std::abs(x);
    }
    return Field(f.grid_ptr(), std::move(v), f.name());
}

std::shared_ptr<const Field> DerivativeCache::get(const DerivativeSpec& spec) const
{
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(spec);
        if (it != cache_.end()) return it->second;
    }
    auto d = std::make_shared<const Field>(differentiate(field_, spec));
    std::lock_guard lock(mutex_);
    auto [it, inserted] = cache_.emplace(spec, std::move(d));
    return it->second;
}

} // namespace kedisc

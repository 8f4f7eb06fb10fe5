#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kedisc {

inline constexpr int kMaxDerivativeOrder = 4;

/// Regular tensor grid. Axis 0 is time, the remaining axes are spatial.
/// Values are stored row-major (last axis fastest).
class Grid {
public:
    Grid() = default;

    /// Validates strictly increasing, uniformly spaced axes.
    explicit Grid(std::vector<std::vector<double>> axes);

    std::size_t ndim() const { return axes_.size(); }
    std::size_t size() const;
    const std::vector<std::vector<double>>& axes() const { return axes_; }
    const std::vector<double>& axis(std::size_t k) const { return axes_[k]; }
    const std::vector<std::size_t>& shape() const { return shape_; }
    const std::vector<double>& spacing() const { return spacing_; }
    std::size_t stride(std::size_t k) const;
    std::vector<std::pair<double, double>> bounds() const;

    bool operator==(const Grid&) const = default;

private:
    std::vector<std::vector<double>> axes_;
    std::vector<std::size_t> shape_;
    std::vector<double> spacing_;
};

Grid build_uniform_grid(std::span<const std::pair<double, double>> bounds,
                        std::span<const std::size_t> shape);

class Field {
public:
    Field() = default;
    Field(std::shared_ptr<const Grid> grid, std::vector<double> values, std::string name = "u");
    Field(const Grid& grid, std::vector<double> values, std::string name = "u");

    const Grid& grid() const { return *grid_; }
    const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    const std::string& name() const { return name_; }
    std::size_t size() const { return values_.size(); }

    double at(std::size_t i, std::size_t j) const { return values_[i * grid_->stride(0) + j]; }

private:
    std::shared_ptr<const Grid> grid_;
    std::vector<double> values_;
    std::string name_;
};

/// Per-axis derivative orders, e.g. {1, 0} is d/dt on a (t, x) grid.
struct DerivativeSpec {
    std::vector<int> orders;

    int total() const;
    bool is_identity() const { return total() == 0; }
    auto operator<=>(const DerivativeSpec&) const = default;
};

/// Finite-difference weights for the derivative of order `order` at offset 0
/// given integer stencil offsets (Fornberg's recursion, unit spacing).
std::vector<double> fd_weights(std::span<const int> offsets, int order);

/// Second-order-accurate finite differences: centered in the interior,
/// shifted one-sided stencils near the boundary. Axes are processed in turn.
Field differentiate(const Field& f, const DerivativeSpec& spec);

/// Local least-squares polynomial (Savitzky-Golay) smoothing along each axis.
Field smooth(const Field& f, int window, int degree);

/// u + N(0, magnitude * |u|) independently per sample.
Field add_noise(const Field& f, double magnitude, std::uint64_t seed);

/// Thread-safe memo of derivatives of one field.
class DerivativeCache {
public:
    explicit DerivativeCache(Field f) : field_(std::move(f)) {}

    const Field& field() const { return field_; }
    std::shared_ptr<const Field> get(const DerivativeSpec& spec) const;

private:
    Field field_;
    mutable std::mutex mutex_;
    mutable std::map<DerivativeSpec, std::shared_ptr<const Field>> cache_;
};

} // namespace kedisc

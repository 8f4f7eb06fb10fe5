#pragma once

#include "kedisc/rng.hpp"
#include "kedisc/tokens.hpp"

#include <Eigen/Dense>

#include <vector>

namespace kedisc {

struct LassoOptions {
    /// Duality gap tolerance, relative to 0.5 * |y|^2.
    double gap_tol = 1e-6;
    int max_sweeps = 10000;
};

/// Coordinate-descent minimizer of 0.5 |y - X c|^2 + lambda |b|_1, where b are the
/// coefficients of the unit-norm rescaled columns. Returns c in the original scale.
/// Zero columns get coefficient 0.
Eigen::VectorXd lasso_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& target, double lambda,
                          const LassoOptions& opts = {});

struct FitOptions {
    double lambda = 1e-3;
    double prune_threshold = 1e-2;
    double f_max = 1e12;
    LassoOptions lasso;
};

struct FitResult {
    /// One per chromosome term; the target slot holds -1, pruned slots 0.
    std::vector<double> coefficients;
    std::vector<bool> kept;
    double residual_norm = 0.0;
    double fitness = 0.0;
};

/// Uniform target index; stores it in the chromosome.
std::size_t select_target(Chromosome& c, Rng& rng);

/// Frequency grid k*pi/L (k = 1..5) per axis for trig tokens, L the axis extent.
std::vector<double> trig_frequencies(const Grid& g, std::size_t axis);

/// LASSO, prune, OLS refit on the interior samples. Writes coefficients, kept mask
/// and fitness back into the chromosome; trig parameters are tuned in place.
FitResult fit_chromosome(Chromosome& c, const TermEvaluator& eval, const FitOptions& opts = {});

/// Residual RMS to fitness, capped at f_max.
double fitness_from_rms(double rms, double f_max);

} // namespace kedisc

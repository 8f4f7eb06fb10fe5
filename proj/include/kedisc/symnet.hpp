#pragma once

#include "kedisc/knowledge.hpp"
#include "kedisc/rng.hpp"
#include "kedisc/tokens.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

namespace kedisc {

/// Polynomial network. Hidden layer i appends f * g to the feature vector, where f
/// is affine in the current features and g affine in the original inputs, so k
/// layers represent polynomials of degree at most k + 1. A linear readout follows.
struct SymNetModel {
    std::vector<Token> inputs;
    std::vector<Eigen::VectorXd> w_f;
    std::vector<double> b_f;
    std::vector<Eigen::VectorXd> w_g;
    std::vector<double> b_g;
    Eigen::VectorXd w_out;
    double b_out = 0.0;

    /// Network input i is (raw_i - input_mean[i]) / input_scale[i]; the raw output is
    /// output_scale times the network output.
    std::vector<double> input_mean;
    std::vector<double> input_scale;
    double output_scale = 1.0;

    std::size_t n_inputs() const { return inputs.size(); }
    std::size_t hidden_layers() const { return w_f.size(); }
    std::size_t n_params() const;
    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& p);
};

/// Zero weights and identity standardization.
SymNetModel make_symnet(std::vector<Token> inputs, std::size_t hidden_layers);
void randomize(SymNetModel& m, Rng& rng);

/// Network output for rows of already standardized inputs.
Eigen::VectorXd forward(const SymNetModel& m, const Eigen::MatrixXd& z);

/// Huber-type l1 smoothing: |w| - s/2 beyond s, w^2 / (2s) inside.
double huber(double w, double s);
double huber_grad(double w, double s);

struct LossParts {
    double data = 0.0;
    double reg = 0.0;
    double total = 0.0;
};

/// Mean squared data loss plus lambda times the Huber sum over all parameters.
/// Fills grad (same layout as params()) when given.
LossParts loss(const SymNetModel& m, const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda, double s,
               Eigen::VectorXd* grad = nullptr);

struct TrainSpec {
    std::vector<double> lambdas{1e-3, 1e-7};
    double huber_s = 1e-3;
    int max_iters = 5000;
    double learning_rate = 1e-2;
    double momentum = 0.9;
    std::size_t hidden_layers = 2;
    int max_restarts = 3;
    std::uint64_t seed = 0;
};

struct TrainResult {
    SymNetModel model;
    LossParts loss;
    int restarts = 0;
};

/// Full-batch heavy-ball descent from the given parameters; returns the best iterate.
TrainResult train(const SymNetModel& start, const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda,
                  const TrainSpec& spec);

/// Monomial (sorted input indices) to coefficient.
using Polynomial = std::map<std::vector<std::size_t>, double>;

/// Exact expansion in the raw inputs, output scale applied.
Polynomial expand(const SymNetModel& m);

/// Expansion as a guess over token products; |c| < threshold dropped.
InitialGuess extract_symbolic(const SymNetModel& m, double threshold = 1e-6);

struct GuessResult {
    InitialGuess guess;
    Term lhs;
    double lambda = 0.0;
    LossParts loss;
};

/// Trains one network per (time-derivative balance term, lambda) and keeps the
/// lowest total loss. The guess holds the balance term with coefficient -1.
GuessResult generate_initial_guess(const TermEvaluator& eval, const std::vector<Token>& pool, const TrainSpec& spec,
                                   double threshold = 1e-6);

} // namespace kedisc

#pragma once

#include "kedisc/field.hpp"
#include "kedisc/tokens.hpp"

#include <string>
#include <utility>
#include <vector>

namespace kedisc {

/// Reference equation lhs = sum(coefficient * term). Moving everything to one
/// side gives the lhs coefficient -1.
struct GroundTruth {
    std::vector<std::pair<Term, double>> terms;
    Term lhs;

    /// Every term of the equation including the lhs.
    std::vector<Term> all_terms() const;
};

struct Dataset {
    Field field;
    GroundTruth truth;
    /// Grid points where the exact solution is smooth enough for finite
    /// differences to apply (empty: everywhere).
    std::vector<bool> regular;
};

/// u_t + u u_x - 0.1 u_xx = 0 on [-8,8] x [0,10] (256 x 101), Cole-Hopf solution
/// for a unit Gaussian initial hump.
Dataset gen_viscous_burgers();

/// Travelling KdV soliton on [-30,30] x [0,20] (512 x 201), c = 1, x0 = -15.
Dataset gen_kdv_soliton();

/// u_tt = u_xx / 25 on [0,1]^2 (101 x 101) with fixed ends, from d'Alembert's formula.
Dataset gen_wave();

/// u_t + u u_x = 0 before shock formation, from characteristics u = f(x - u t)
/// with f(x) = 500 (1 - tanh(x / 500)).
Dataset gen_inviscid_burgers();

/// Inviscid Burgers' characteristic solution at arbitrary grid points.
/// Throws GenerationError when Newton fails (post-shock times).
Field inviscid_burgers_field(const Grid& grid);

Dataset generate(const std::string& equation_id);
std::vector<std::string> builtin_equations();

/// Analytic KdV soliton and its derivatives, for residual checks.
struct SolitonSample {
    double u, u_t, u_x, u_xxx;
};
SolitonSample kdv_soliton_at(double x, double t, double c = 1.0, double x0 = -15.0);

void save_field(const Field& f, const std::string& values_path, const std::string& meta_path);
Field load_csv(const std::string& values_path, const std::string& meta_path);

void save_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_truth(const std::string& path);

/// Writes field.csv, field.json and truth.json into dir.
void save_dataset(const Dataset& d, const std::string& dir);

} // namespace kedisc

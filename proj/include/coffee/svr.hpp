#pragma once

#include "coffee/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace coffee {

struct SvrTargetParams {
    double c = 10.0;     // box penalty
    double gamma = 0.1;  // RBF width: exp(-gamma * |a - b|^2)
    bool operator==(const SvrTargetParams&) const = default;
};

struct SvrConfig {
    // One (C, gamma) pair per target. Left empty, each target is tuned by
    // grid search with tuning_folds-fold CV on the training data.
    std::vector<SvrTargetParams> per_target;
    std::vector<double> c_grid{1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{0.01, 0.1, 1.0};
    std::size_t tuning_folds = 10;
    double epsilon = 0.1;
    double tolerance = 1e-3;
    std::size_t max_iterations = 10'000'000;
    std::uint64_t seed = 0;

    bool operator==(const SvrConfig&) const = default;
};

void to_json(nlohmann::json& j, const SvrConfig& c);
void from_json(const nlohmann::json& j, SvrConfig& c);

/// Dual solution of one epsilon-SVR problem
///   min 1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - z' (a - a*)
///   s.t. sum(a - a*) = 0, 0 <= a, a* <= C
/// with decision function f(x) = sum_i (a_i - a*_i) K(x_i, x) + bias.
struct SvrSolution {
    std::vector<double> alpha;
    std::vector<double> alpha_star;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double kkt_gap = 0.0;  // max violating pair gap at exit; <= tolerance when converged
};

/// Sequential minimal optimisation with second-order working set selection
/// over the 2n-variable form of the dual. kernel is the n x n Gram matrix.
// warm_start, if given, must be feasible for c (e.g. a solution for a smaller C).
SvrSolution solve_epsilon_svr(const Matrix& kernel, std::span<const double> targets, double c, double epsilon,
                              double tolerance, std::size_t max_iterations, const SvrSolution* warm_start = nullptr);

// Largest KKT violation among dual variables strictly inside (0, C),
// measured against the bias: |y_t * grad_t + bias| for the libsvm sign
// convention. Exposed for tests.
double free_variable_kkt_residual(const Matrix& kernel, std::span<const double> targets, double epsilon,
                                  const SvrSolution& solution, double c);

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma);

/// Single-output RBF model keeping only its support vectors.
class SvrModel {
public:
    static SvrModel from_solution(const Matrix& x, const SvrSolution& solution, double gamma);

    Vector predict(const Matrix& x) const;
    std::size_t support_count() const { return static_cast<std::size_t>(support_.rows()); }

    nlohmann::json to_json() const;
    static SvrModel from_json(const nlohmann::json& j);

private:
    Matrix support_;
    Vector coef_;
    double bias_ = 0.0;
    double gamma_ = 0.1;
};

/// Eight independent epsilon-SVRs, one per subjective attribute.
class SvrEnsemble {
public:
    static SvrEnsemble fit(const Matrix& x, const Matrix& y, const SvrConfig& config);

    Matrix predict(const Matrix& x) const;

    const std::vector<SvrTargetParams>& params() const { return params_; }
    bool converged() const { return converged_; }
    const std::vector<SvrModel>& models() const { return models_; }

    nlohmann::json to_json() const;
    static SvrEnsemble from_json(const nlohmann::json& j);

private:
    std::vector<SvrModel> models_;
    std::vector<SvrTargetParams> params_;
    bool converged_ = true;
};

/// Per-target grid search: mean k-fold RMSE for every (C, gamma) pair,
/// returning the argmin per target (ties: earlier C, then earlier gamma).
std::vector<SvrTargetParams> tune_svr(const Matrix& x, const Matrix& y, const SvrConfig& config);

}  // namespace coffee

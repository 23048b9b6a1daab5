#include "coffee/svr.hpp"

#include "coffee/parallel.hpp"
#include "coffee/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coffee {

void to_json(nlohmann::json& j, const SvrConfig& c) {
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : c.per_target) params.push_back({{"c", p.c}, {"gamma", p.gamma}});
    j = {{"per_target", params},         {"c_grid", c.c_grid},         {"gamma_grid", c.gamma_grid},
         {"tuning_folds", c.tuning_folds}, {"epsilon", c.epsilon},     {"tolerance", c.tolerance},
         {"max_iterations", c.max_iterations}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SvrConfig& c) {
    c = SvrConfig{};
    if (j.contains("per_target"))
        for (const auto& p : j["per_target"]) c.per_target.push_back({p.at("c").get<double>(), p.at("gamma").get<double>()});
    c.c_grid = j.value("c_grid", c.c_grid);
    c.gamma_grid = j.value("gamma_grid", c.gamma_grid);
    c.tuning_folds = j.value("tuning_folds", c.tuning_folds);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.tolerance = j.value("tolerance", c.tolerance);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.seed = j.value("seed", c.seed);
}

namespace {

constexpr double kTau = 1e-12;

// The 2n-variable problem: beta = [alpha; alpha*], sign y = [+1; -1],
// linear term p = [eps - z; eps + z], Q_st = y_s y_t K(s mod n, t mod n).
struct DualProblem {
    const Matrix& kernel;
    std::size_t n;
    std::vector<double> p;
    double c;

    double sign(std::size_t t) const { return t < n ? 1.0 : -1.0; }
    // Symmetric; indexed (t, s) so scans over t read one contiguous column.
    double k(std::size_t s, std::size_t t) const {
        return kernel(static_cast<Eigen::Index>(t % n), static_cast<Eigen::Index>(s % n));
    }
    double q(std::size_t s, std::size_t t) const { return sign(s) * sign(t) * k(s, t); }
};

double compute_rho(const DualProblem& problem, const std::vector<double>& beta, const std::vector<double>& grad) {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < 2 * problem.n; ++t) {
        const double y = problem.sign(t);
        const double yg = y * grad[t];
        if (beta[t] >= problem.c) {
            if (y < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (beta[t] <= 0.0) {
            if (y > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free;
            sum_free += yg;
        }
    }
    return free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
}

}  // namespace

SvrSolution solve_epsilon_svr(const Matrix& kernel, std::span<const double> targets, double c, double epsilon,
                              double tolerance, std::size_t max_iterations, const SvrSolution* warm_start) {
    if (!(c > 0.0)) throw std::invalid_argument("svr: C must be positive");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("svr: epsilon must be non-negative");
    const std::size_t n = targets.size();
    if (static_cast<std::size_t>(kernel.rows()) != n || static_cast<std::size_t>(kernel.cols()) != n)
        throw std::invalid_argument("svr: kernel shape does not match targets");

    DualProblem problem{kernel, n, std::vector<double>(2 * n), c};
    for (std::size_t t = 0; t < n; ++t) {
        problem.p[t] = epsilon - targets[t];
        problem.p[t + n] = epsilon + targets[t];
    }
    const std::size_t l = 2 * n;
    std::vector<double> beta(l, 0.0);
    std::vector<double> grad = problem.p;
    if (warm_start) {
        if (warm_start->alpha.size() != n || warm_start->alpha_star.size() != n)
            throw std::invalid_argument("svr: warm start does not match the problem size");
        Vector w(static_cast<Eigen::Index>(n));
        for (std::size_t t = 0; t < n; ++t) {
            beta[t] = std::clamp(warm_start->alpha[t], 0.0, c);
            beta[t + n] = std::clamp(warm_start->alpha_star[t], 0.0, c);
            w[static_cast<Eigen::Index>(t)] = beta[t] - beta[t + n];
        }
        const Vector kw = kernel * w;
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += kw[static_cast<Eigen::Index>(t)];
            grad[t + n] -= kw[static_cast<Eigen::Index>(t)];
        }
    }
    std::vector<double> diag(n);
    for (std::size_t t = 0; t < n; ++t) diag[t] = kernel(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));

    // alpha_r is variable r (sign +1), alpha*_r is variable r + n (sign -1);
    // both halves share kernel row r, so every scan walks rows once.
    double* a = beta.data();
    double* b = beta.data() + n;
    double* ga = grad.data();
    double* gb = grad.data() + n;
    const double inf = std::numeric_limits<double>::infinity();

    // max of -y G over the variables that may increase (in y direction).
    auto select_first = [&](double& gmax) {
        gmax = -inf;
        std::size_t best = l;
        for (std::size_t r = 0; r < n; ++r) {
            if (a[r] < c && -ga[r] >= gmax) {
                gmax = -ga[r];
                best = r;
            }
            if (b[r] > 0.0 && gb[r] >= gmax) {
                gmax = gb[r];
                best = r + n;
            }
        }
        return best;
    };

    SvrSolution solution;
    double gap = inf;
    double gmax = -inf;
    std::size_t i = select_first(gmax);

    while (true) {
        // Second index: second-order gain, Fan, Chen and Lin style. For
        // either half quad = K_ii + K_rr - 2 K_ir.
        double gmax2 = -inf;
        std::size_t j = l;
        double best_obj = inf;
        const double* ki = i < l ? problem.kernel.col(static_cast<Eigen::Index>(i % n)).data() : nullptr;
        const double kii = i < l ? diag[i % n] : 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (a[r] > 0.0) {
                gmax2 = std::max(gmax2, ga[r]);
                const double diff = gmax + ga[r];
                if (diff > 0.0 && ki) {
                    const double quad = kii + diag[r] - 2.0 * ki[r];
                    const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
                    if (obj <= best_obj) {
                        best_obj = obj;
                        j = r;
                    }
                }
            }
            if (b[r] < c) {
                gmax2 = std::max(gmax2, -gb[r]);
                const double diff = gmax - gb[r];
                if (diff > 0.0 && ki) {
                    const double quad = kii + diag[r] - 2.0 * ki[r];
                    const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
                    if (obj <= best_obj) {
                        best_obj = obj;
                        j = r + n;
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if (gap < tolerance || j == l) {
            solution.converged = true;
            break;
        }
        if (solution.iterations >= max_iterations) break;
        ++solution.iterations;

        // Analytic two-variable update with box clipping.
        const double old_i = beta[i];
        const double old_j = beta[j];
        const double qij = problem.q(i, j);
        if (problem.sign(i) != problem.sign(j)) {
            double quad = problem.k(i, i) + problem.k(j, j) + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if (diff > 0.0) {
                if (beta[j] < 0.0) {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if (beta[i] < 0.0) {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if (diff > 0.0) {
                if (beta[i] > c) {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if (beta[j] > c) {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            double quad = problem.k(i, i) + problem.k(j, j) - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if (sum > c) {
                if (beta[i] > c) {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if (beta[j] < 0.0) {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if (sum > c) {
                if (beta[j] > c) {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if (beta[i] < 0.0) {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        // Gradient update fused with the next first-index scan.
        const double wi = problem.sign(i) * (beta[i] - old_i);
        const double wj = problem.sign(j) * (beta[j] - old_j);
        const double* col_i = problem.kernel.col(static_cast<Eigen::Index>(i % n)).data();
        const double* col_j = problem.kernel.col(static_cast<Eigen::Index>(j % n)).data();
        gmax = -inf;
        i = l;
        for (std::size_t r = 0; r < n; ++r) {
            const double v = wi * col_i[r] + wj * col_j[r];
            ga[r] += v;
            gb[r] -= v;
            if (a[r] < c && -ga[r] >= gmax) {
                gmax = -ga[r];
                i = r;
            }
            if (b[r] > 0.0 && gb[r] >= gmax) {
                gmax = gb[r];
                i = r + n;
            }
        }
    }

    solution.kkt_gap = gap;
    solution.alpha.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(n));
    solution.alpha_star.assign(beta.begin() + static_cast<std::ptrdiff_t>(n), beta.end());
    solution.bias = -compute_rho(problem, beta, grad);
    return solution;
}

double free_variable_kkt_residual(const Matrix& kernel, std::span<const double> targets, double epsilon,
                                  const SvrSolution& solution, double c) {
    const std::size_t n = targets.size();
    Vector coef(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) coef[static_cast<Eigen::Index>(t)] = solution.alpha[t] - solution.alpha_star[t];
    const Vector k_coef = kernel * coef;
    const double rho = -solution.bias;
    double worst = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double kc = k_coef[static_cast<Eigen::Index>(t)];
        // y * grad for alpha_t (y = +1) and alpha*_t (y = -1).
        const double yg_alpha = epsilon - targets[t] + kc;
        const double yg_star = -(epsilon + targets[t] - kc);
        if (solution.alpha[t] > 0.0 && solution.alpha[t] < c) worst = std::max(worst, std::abs(yg_alpha - rho));
        if (solution.alpha_star[t] > 0.0 && solution.alpha_star[t] < c)
            worst = std::max(worst, std::abs(yg_star - rho));
    }
    return worst;
}

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("svr: gamma must be positive");
    const Vector an = a.rowwise().squaredNorm();
    const Vector bn = b.rowwise().squaredNorm();
    Matrix d = -2.0 * (a * b.transpose());
    d.colwise() += an;
    d.rowwise() += bn.transpose();
    return (-gamma * d.cwiseMax(0.0)).array().exp().matrix();
}

SvrModel SvrModel::from_solution(const Matrix& x, const SvrSolution& solution, double gamma) {
    std::vector<Eigen::Index> rows;
    std::vector<double> coef;
    for (std::size_t t = 0; t < solution.alpha.size(); ++t) {
        const double v = solution.alpha[t] - solution.alpha_star[t];
        if (v != 0.0) {
            rows.push_back(static_cast<Eigen::Index>(t));
            coef.push_back(v);
        }
    }
    SvrModel model;
    model.support_ = x(rows, Eigen::all);
    model.coef_ = Eigen::Map<const Vector>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    model.bias_ = solution.bias;
    model.gamma_ = gamma;
    return model;
}

Vector SvrModel::predict(const Matrix& x) const {
    if (support_.rows() == 0) return Vector::Constant(x.rows(), bias_);
    if (x.cols() != support_.cols()) throw std::invalid_argument("svr: input width mismatch");
    return (rbf_kernel(x, support_, gamma_) * coef_).array() + bias_;
}

nlohmann::json SvrModel::to_json() const {
    // Support rows are stored sparsely: one-hot inputs are mostly zeros.
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < support_.rows(); ++r) {
        nlohmann::json entries = nlohmann::json::array();
        for (Eigen::Index c = 0; c < support_.cols(); ++c)
            if (support_(r, c) != 0.0) entries.push_back({c, support_(r, c)});
        rows.push_back(std::move(entries));
    }
    std::vector<double> coef(coef_.data(), coef_.data() + coef_.size());
    return {{"gamma", gamma_}, {"bias", bias_}, {"width", support_.cols()}, {"coef", coef}, {"support", rows}};
}

SvrModel SvrModel::from_json(const nlohmann::json& j) {
    SvrModel model;
    model.gamma_ = j.at("gamma").get<double>();
    model.bias_ = j.at("bias").get<double>();
    const auto coef = j.at("coef").get<std::vector<double>>();
    model.coef_ = Eigen::Map<const Vector>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    const auto& rows = j.at("support");
    model.support_ = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), j.at("width").get<Eigen::Index>());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const auto& e : rows[r])
            model.support_(static_cast<Eigen::Index>(r), e[0].get<Eigen::Index>()) = e[1].get<double>();
    return model;
}

namespace {

void check_grids(const SvrConfig& config) {
    for (double c : config.c_grid)
        if (!(c > 0.0)) throw std::invalid_argument("svr: C must be positive");
    for (double g : config.gamma_grid)
        if (!(g > 0.0)) throw std::invalid_argument("svr: gamma must be positive");
    if (config.c_grid.empty() || config.gamma_grid.empty()) throw std::invalid_argument("svr: empty tuning grid");
}

std::vector<double> column(const Matrix& y, Eigen::Index t, std::span<const Eigen::Index> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(y(r, t));
    return out;
}

}  // namespace

std::vector<SvrTargetParams> tune_svr(const Matrix& x, const Matrix& y, const SvrConfig& config) {
    check_grids(config);
    const auto n = static_cast<std::size_t>(x.rows());
    const std::size_t folds = config.tuning_folds;
    if (folds < 2 || n < folds) throw std::invalid_argument("svr: tuning needs 2 <= folds <= rows");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, {0x74756e65ULL}));
    rng.shuffle(order.begin(), order.end());
    std::vector<std::size_t> fold_of(n);
    for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % folds;

    const std::size_t nc = config.c_grid.size();
    const std::size_t ng = config.gamma_grid.size();
    const auto targets = static_cast<std::size_t>(y.cols());
    // rmse[((g * folds + f) * nc + c) * targets + t]
    std::vector<double> rmse(ng * folds * nc * targets, 0.0);

    for (std::size_t g = 0; g < ng; ++g) {
        const Matrix full = rbf_kernel(x, x, config.gamma_grid[g]);
        parallel_for(folds, [&](std::size_t f) {
            std::vector<Eigen::Index> train, valid;
            for (std::size_t i = 0; i < n; ++i)
                (fold_of[i] == f ? valid : train).push_back(static_cast<Eigen::Index>(i));
            const Matrix k_train = full(train, train);
            const Matrix k_valid = full(valid, train);
            // Walk C upwards so each solve can start from the previous one.
            std::vector<std::size_t> c_order(nc);
            std::iota(c_order.begin(), c_order.end(), 0);
            std::stable_sort(c_order.begin(), c_order.end(),
                             [&](std::size_t p, std::size_t q) { return config.c_grid[p] < config.c_grid[q]; });
            for (std::size_t t = 0; t < targets; ++t) {
                const auto z = column(y, static_cast<Eigen::Index>(t), train);
                SvrSolution previous;
                for (std::size_t ci = 0; ci < nc; ++ci) {
                    const std::size_t c = c_order[ci];
                    const auto s = solve_epsilon_svr(k_train, z, config.c_grid[c], config.epsilon, config.tolerance,
                                                     config.max_iterations, ci > 0 ? &previous : nullptr);
                    Vector coef(static_cast<Eigen::Index>(train.size()));
                    for (std::size_t i = 0; i < train.size(); ++i)
                        coef[static_cast<Eigen::Index>(i)] = s.alpha[i] - s.alpha_star[i];
                    const Vector pred = (k_valid * coef).array() + s.bias;
                    double sse = 0.0;
                    for (std::size_t i = 0; i < valid.size(); ++i) {
                        const double r = clamp_score(pred[static_cast<Eigen::Index>(i)]) -
                                         y(valid[i], static_cast<Eigen::Index>(t));
                        sse += r * r;
                    }
                    rmse[((g * folds + f) * nc + c) * targets + t] = std::sqrt(sse / static_cast<double>(valid.size()));
                    previous = s;
                }
            }
        });
    }

    std::vector<SvrTargetParams> best(targets);
    for (std::size_t t = 0; t < targets; ++t) {
        double best_score = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t g = 0; g < ng; ++g) {
                double mean = 0.0;
                for (std::size_t f = 0; f < folds; ++f) mean += rmse[((g * folds + f) * nc + c) * targets + t];
                mean /= static_cast<double>(folds);
                if (mean < best_score) {
                    best_score = mean;
                    best[t] = {config.c_grid[c], config.gamma_grid[g]};
                }
            }
        }
    }
    return best;
}

SvrEnsemble SvrEnsemble::fit(const Matrix& x, const Matrix& y, const SvrConfig& config) {
    if (x.rows() < 2) throw std::invalid_argument("svr: at least two training rows are required");
    if (x.rows() != y.rows()) throw std::invalid_argument("svr: X and Y row counts differ");
    if (x.hasNaN() || y.hasNaN()) throw std::invalid_argument("svr: NaN in training data");

    SvrEnsemble ensemble;
    ensemble.params_ = config.per_target.empty() ? tune_svr(x, y, config) : config.per_target;
    if (ensemble.params_.size() != static_cast<std::size_t>(y.cols()))
        throw std::invalid_argument("svr: need exactly one (C, gamma) pair per target");
    for (const auto& p : ensemble.params_) {
        if (!(p.c > 0.0)) throw std::invalid_argument("svr: C must be positive");
        if (!(p.gamma > 0.0)) throw std::invalid_argument("svr: gamma must be positive");
    }

    const auto targets = static_cast<std::size_t>(y.cols());
    ensemble.models_.resize(targets);
    std::vector<char> converged(targets, 1);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(x.rows()));
    std::iota(all.begin(), all.end(), 0);

    // Targets sharing a gamma share one Gram matrix.
    std::vector<double> gammas;
    for (const auto& p : ensemble.params_)
        if (std::find(gammas.begin(), gammas.end(), p.gamma) == gammas.end()) gammas.push_back(p.gamma);
    for (double gamma : gammas) {
        const Matrix kernel = rbf_kernel(x, x, gamma);
        std::vector<std::size_t> members;
        for (std::size_t t = 0; t < targets; ++t)
            if (ensemble.params_[t].gamma == gamma) members.push_back(t);
        parallel_for(members.size(), [&](std::size_t m) {
            const std::size_t t = members[m];
            const auto z = column(y, static_cast<Eigen::Index>(t), all);
            const auto s = solve_epsilon_svr(kernel, z, ensemble.params_[t].c, config.epsilon, config.tolerance,
                                             config.max_iterations);
            converged[t] = s.converged ? 1 : 0;
            ensemble.models_[t] = SvrModel::from_solution(x, s, gamma);
        });
    }
    ensemble.converged_ = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
    return ensemble;
}

Matrix SvrEnsemble::predict(const Matrix& x) const {
    Matrix out(x.rows(), static_cast<Eigen::Index>(models_.size()));
    for (std::size_t t = 0; t < models_.size(); ++t) out.col(static_cast<Eigen::Index>(t)) = models_[t].predict(x);
    return out;
}

nlohmann::json SvrEnsemble::to_json() const {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : models_) models.push_back(m.to_json());
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : params_) params.push_back({{"c", p.c}, {"gamma", p.gamma}});
    return {{"converged", converged_}, {"params", params}, {"models", models}};
}

SvrEnsemble SvrEnsemble::from_json(const nlohmann::json& j) {
    SvrEnsemble e;
    e.converged_ = j.at("converged").get<bool>();
    for (const auto& p : j.at("params")) e.params_.push_back({p.at("c").get<double>(), p.at("gamma").get<double>()});
    for (const auto& m : j.at("models")) e.models_.push_back(SvrModel::from_json(m));
    return e;
}

}  // namespace coffee

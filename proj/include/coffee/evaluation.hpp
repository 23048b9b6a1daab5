#pragma once

#include "coffee/dataset.hpp"
#include "coffee/regressor.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace coffee {

// Column-wise root mean squared error.
Vector rmse(const Matrix& pred, const Matrix& truth);

// Fold index per record: a seeded shuffle dealt round-robin, so fold sizes
// differ by at most one.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct FoldResult {
    Vector rmse;                       // per attribute, on the validation rows
    std::size_t train_rows = 0;
    std::size_t validation_rows = 0;
    std::string training_fingerprint;  // of the encoded training matrix the model saw
    std::string encoder_fingerprint;
};

struct CvReport {
    ModelFamily family = ModelFamily::forest;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    Vector per_attribute;  // mean over folds
    double average = 0.0;  // mean over attributes
    std::vector<FoldResult> per_fold;
    bool converged = true;
};

/// k-fold CV with the encoder refitted on each training fold. Predictions are
/// clamped like any served prediction before scoring.
CvReport cross_validate(std::span<const CoffeeRecord> records, ModelFamily family, const ModelConfig& config,
                        std::size_t folds = 10, std::uint64_t seed = 0);

void to_json(nlohmann::json& j, const CvReport& r);
// model, average_rmse
void write_cv_table(std::ostream& out, std::span<const CvReport> reports);

struct MlpSearchSpace {
    std::vector<std::size_t> widths{16, 32, 64, 128, 256};
    std::vector<std::size_t> depths{1, 2, 3};
    std::vector<double> dropout_rates{0.0, 0.1, 0.2, 0.3};
    std::vector<double> learning_rates{1e-4, 3e-4, 1e-3, 3e-3};
    std::vector<std::size_t> batch_sizes{16, 32, 64};
    MlpConfig base;  // epochs, Adam moments and anything not searched
};

struct MlpSearchTrial {
    MlpConfig config;
    double cv_rmse = 0.0;
};

struct MlpSearchResult {
    MlpConfig best;
    double cv_rmse = 0.0;
    std::vector<MlpSearchTrial> trials;  // in sample order
};

/// Samples budget configurations uniformly (one width shared by every hidden
/// layer) and keeps the lowest average CV RMSE; ties go to the earlier sample.
MlpSearchResult random_search_mlp(std::span<const CoffeeRecord> records, const MlpSearchSpace& space,
                                  std::size_t budget, std::uint64_t seed, std::size_t folds = 10);

}  // namespace coffee

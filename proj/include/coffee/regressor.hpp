#pragma once

#include "coffee/dataset.hpp"
#include "coffee/encoder.hpp"
#include "coffee/forest.hpp"
#include "coffee/mlp.hpp"
#include "coffee/svr.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace coffee {

enum class ModelFamily { forest, svr, mlp };

std::string_view to_string(ModelFamily family);
// Accepts "rf", "forest", "svr", "mlp".
std::optional<ModelFamily> parse_family(std::string_view text);

// Hyperparameters for every family; only the section matching the trained
// family is used.
struct ModelConfig {
    ForestConfig forest;
    SvrConfig svr;
    MlpConfig mlp;

    // Sets the seed of every section.
    ModelConfig& reseed(std::uint64_t seed);
    bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

struct TrainingMetadata {
    std::string dataset_fingerprint;  // of the training inputs
    std::size_t rows = 0;
    bool converged = true;            // false when an SVR target hit its iteration cap
    std::vector<double> loss_curve;   // per-epoch training loss (MLP only)
};

/// A fitted multi-target model bundled with the encoder it was trained
/// against. Predictions are clamped into (0, 10].
class TrainedRegressor {
public:
    using Model = std::variant<RandomForest, SvrEnsemble, Mlp>;

    TrainedRegressor(Encoder encoder, Model model, ModelConfig config, TrainingMetadata metadata);

    ModelFamily family() const;
    const Encoder& encoder() const { return encoder_; }
    const Model& model() const { return model_; }
    const ModelConfig& config() const { return config_; }
    const TrainingMetadata& metadata() const { return metadata_; }

    // X must carry exactly the encoder's columns.
    Matrix predict(const EncodedMatrix& x) const;
    Matrix predict(std::span<const BeanProperties> beans, TransformLog* log = nullptr) const;
    Matrix predict(std::span<const CoffeeRecord> records, TransformLog* log = nullptr) const;
    // Unclamped model output on an already encoded matrix.
    Matrix predict_raw(const Matrix& x) const;

    // Versioned JSON document; load(serialize()) predicts bit-identically.
    std::string serialize() const;
    static TrainedRegressor deserialize(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static TrainedRegressor load(const std::filesystem::path& path);

    // Content hash of serialize().
    std::string fingerprint() const;

private:
    Encoder encoder_;
    Model model_;
    ModelConfig config_;
    TrainingMetadata metadata_;
};

Matrix clamp_scores(Matrix values);

TrainedRegressor fit_forest(const Encoder& encoder, const EncodedMatrix& x, const Matrix& y, const ForestConfig& cfg);
TrainedRegressor fit_svr(const Encoder& encoder, const EncodedMatrix& x, const Matrix& y, const SvrConfig& cfg);
TrainedRegressor fit_mlp(const Encoder& encoder, const EncodedMatrix& x, const Matrix& y, const MlpConfig& cfg);

// Fits the encoder on records, then the requested family.
TrainedRegressor train_regressor(std::span<const CoffeeRecord> records, ModelFamily family, const ModelConfig& config);

std::string matrix_fingerprint(const Matrix& x, const Matrix& y);

}  // namespace coffee

#pragma once

#include "coffee/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <vector>

namespace coffee {

struct AdamSettings {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool operator==(const AdamSettings&) const = default;
};

struct MlpConfig {
    std::vector<std::size_t> hidden_layers{256, 256, 256};
    double dropout_rate = 0.2;
    AdamSettings adam;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    bool operator==(const MlpConfig&) const = default;
};

void to_json(nlohmann::json& j, const MlpConfig& c);
void from_json(const nlohmann::json& j, MlpConfig& c);

/// Adam with bias correction, one moment pair per parameter tensor.
class Adam {
public:
    explicit Adam(AdamSettings settings) : settings_(settings) {}

    // Registers a tensor; returns its slot for step().
    std::size_t add(Eigen::Index size);
    void begin_step() { ++t_; }
    void step(std::size_t slot, double* param, const double* grad);
    std::size_t steps() const { return t_; }

private:
    AdamSettings settings_;
    std::vector<Vector> m_, v_;
    std::size_t t_ = 0;
};

/// Fully connected regressor: ReLU hidden layers, inverted dropout after each
/// hidden activation (training only), linear output head, RMSE loss.
class Mlp {
public:
    struct Layer {
        Matrix weights;  // inputs x outputs
        Vector bias;
    };
    struct Gradients {
        std::vector<Matrix> weights;
        std::vector<Vector> bias;
    };
    // One 0/1 keep-mask per hidden layer (batch x width); empty disables dropout.
    using DropoutMasks = std::vector<Matrix>;

    /// Fan-in uniform initialisation U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the
    /// output bias starts at the per-target training mean.
    static Mlp initialise(Eigen::Index inputs, const Matrix& y, const MlpConfig& config);

    /// Mini-batch Adam on the RMSE loss. Throws on a non-finite loss.
    static Mlp fit(const Matrix& x, const Matrix& y, const MlpConfig& config, std::vector<double>* loss_curve = nullptr);

    Matrix predict(const Matrix& x) const;

    double loss(const Matrix& x, const Matrix& y) const;
    double loss_and_gradients(const Matrix& x, const Matrix& y, Gradients& grads,
                              const DropoutMasks& masks = {}) const;

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    double dropout_rate() const { return dropout_rate_; }

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

private:
    Matrix forward(const Matrix& x, const DropoutMasks& masks, std::vector<Matrix>* pre,
                   std::vector<Matrix>* post) const;

    std::vector<Layer> layers_;
    double dropout_rate_ = 0.0;
};

}  // namespace coffee

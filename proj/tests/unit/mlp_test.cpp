#include "coffee/encoder.hpp"
#include "coffee/mlp.hpp"
#include "coffee/rng.hpp"
#include "test_data.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace coffee;

namespace {

struct Batch {
    Matrix x, y;
};

Batch random_batch(Eigen::Index rows, Eigen::Index inputs, Eigen::Index outputs, std::uint64_t seed) {
    Rng rng(seed);
    Batch b{Matrix(rows, inputs), Matrix(rows, outputs)};
    for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < b.y.size(); ++i) b.y.data()[i] = rng.uniform(6.0, 9.0);
    return b;
}

double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

// Central differences on every parameter of every layer.
double worst_gradient_error(Mlp& net, const Batch& b, const Mlp::DropoutMasks& masks) {
    Mlp::Gradients grads;
    net.loss_and_gradients(b.x, b.y, grads, masks);
    const double h = 1e-5;
    double worst = 0.0;
    Mlp::Gradients scratch;
    auto loss = [&] { return net.loss_and_gradients(b.x, b.y, scratch, masks); };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
            double& w = layer.weights.data()[i];
            const double saved = w;
            w = saved + h;
            const double up = loss();
            w = saved - h;
            const double down = loss();
            w = saved;
            worst = std::max(worst, relative_error(grads.weights[l].data()[i], (up - down) / (2 * h)));
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            double& v = layer.bias[i];
            const double saved = v;
            v = saved + h;
            const double up = loss();
            v = saved - h;
            const double down = loss();
            v = saved;
            worst = std::max(worst, relative_error(grads.bias[l][i], (up - down) / (2 * h)));
        }
    }
    return worst;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    Adam adam({});
    Vector p = Vector::LinSpaced(5, -1.0, 1.0);
    const Vector before = p;
    const Vector g = Vector::Zero(5);
    const auto slot = adam.add(5);
    for (int s = 0; s < 3; ++s) {
        adam.begin_step();
        adam.step(slot, p.data(), g.data());
    }
    EXPECT_TRUE(p == before);
}

TEST(Adam, FirstStepMovesByTheLearningRate) {
    AdamSettings s;
    s.learning_rate = 1e-3;
    Adam adam(s);
    Vector p = Vector::Zero(4);
    const Vector g = (Vector(4) << 0.5, -2.0, 1e-3, 40.0).finished();
    const auto slot = adam.add(4);
    adam.begin_step();
    adam.step(slot, p.data(), g.data());
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(std::abs(p[i]), 1e-3, 1e-3 * 1e-4) << i;
        EXPECT_LT(p[i] * g[i], 0.0);
    }
}

TEST(Mlp, AnalyticGradientsMatchFiniteDifferences) {
    MlpConfig cfg;
    cfg.hidden_layers = {7, 6, 5};
    cfg.dropout_rate = 0.0;
    const auto b = random_batch(5, 4, 8, 11);
    auto net = Mlp::initialise(4, b.y, cfg);
    // Move the output bias away from the batch mean so gradients are not tiny.
    net.layers().back().bias.array() -= 0.7;
    EXPECT_LT(worst_gradient_error(net, b, {}), 1e-4);
}

TEST(Mlp, GradientsMatchWithFixedDropoutMasks) {
    MlpConfig cfg;
    cfg.hidden_layers = {6, 6};
    cfg.dropout_rate = 0.25;
    const auto b = random_batch(5, 3, 8, 12);
    auto net = Mlp::initialise(3, b.y, cfg);
    net.layers().back().bias.array() += 0.4;
    Rng rng(5);
    Mlp::DropoutMasks masks;
    for (int l = 0; l < 2; ++l) {
        Matrix m(5, 6);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform01() < 0.75 ? 1.0 : 0.0;
        masks.push_back(m);
    }
    EXPECT_LT(worst_gradient_error(net, b, masks), 1e-4);
}

TEST(Mlp, DefaultArchitectureShapes) {
    const auto b = random_batch(3, 10, 8, 1);
    const auto net = Mlp::initialise(10, b.y, MlpConfig{});
    ASSERT_EQ(net.layers().size(), 4u);
    EXPECT_EQ(net.layers()[0].weights.cols(), 256);
    EXPECT_EQ(net.layers()[1].weights.cols(), 256);
    EXPECT_EQ(net.layers()[2].weights.cols(), 256);
    EXPECT_EQ(net.layers()[3].weights.cols(), 8);
    EXPECT_EQ(net.predict(b.x).cols(), 8);
    const double bound = 1.0 / std::sqrt(10.0);
    EXPECT_LE(net.layers()[0].weights.cwiseAbs().maxCoeff(), bound);
}

TEST(Mlp, TrainingReducesLossAndPredictionIsDeterministic) {
    const auto records = coffee::test::small_dataset(160);
    const auto x = encode(records).values;
    const auto y = subjective_matrix(records);
    MlpConfig cfg;
    cfg.hidden_layers = {32, 32};
    cfg.epochs = 30;
    cfg.seed = 4;
    std::vector<double> curve;
    const auto net = Mlp::fit(x, y, cfg, &curve);
    ASSERT_EQ(curve.size(), 30u);
    EXPECT_LT(curve.back(), curve.front());
    EXPECT_TRUE(net.predict(x) == net.predict(x));

    const auto again = Mlp::fit(x, y, cfg);
    EXPECT_TRUE(again.predict(x) == net.predict(x));
    const auto restored = Mlp::from_json(nlohmann::json::parse(net.to_json().dump()));
    EXPECT_TRUE(restored.predict(x) == net.predict(x));
}

TEST(Mlp, DivergenceAbortsWithDiagnostics) {
    const auto b = random_batch(64, 5, 8, 2);
    MlpConfig cfg;
    cfg.hidden_layers = {16, 16};
    cfg.adam.learning_rate = 1e200;
    cfg.epochs = 50;
    try {
        Mlp::fit(b.x, b.y, cfg);
        FAIL() << "expected divergence";
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("learning rate"), std::string::npos) << what;
        EXPECT_NE(what.find("epoch"), std::string::npos) << what;
    }
}

TEST(Mlp, RejectsBadConfig) {
    const auto b = random_batch(8, 3, 8, 3);
    MlpConfig cfg;
    cfg.dropout_rate = 1.0;
    EXPECT_THROW(Mlp::fit(b.x, b.y, cfg), std::invalid_argument);
    cfg.dropout_rate = 0.2;
    cfg.batch_size = 0;
    EXPECT_THROW(Mlp::fit(b.x, b.y, cfg), std::invalid_argument);
}

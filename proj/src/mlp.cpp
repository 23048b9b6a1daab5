#include "coffee/mlp.hpp"

#include "coffee/rng.hpp"

#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>

namespace coffee {

void to_json(nlohmann::json& j, const MlpConfig& c) {
    j = {{"hidden_layers", c.hidden_layers},
         {"dropout_rate", c.dropout_rate},
         {"learning_rate", c.adam.learning_rate},
         {"beta1", c.adam.beta1},
         {"beta2", c.adam.beta2},
         {"adam_epsilon", c.adam.epsilon},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, MlpConfig& c) {
    c = MlpConfig{};
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("adam_epsilon", c.adam.epsilon);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
}

std::size_t Adam::add(Eigen::Index size) {
    m_.push_back(Vector::Zero(size));
    v_.push_back(Vector::Zero(size));
    return m_.size() - 1;
}

void Adam::step(std::size_t slot, double* param, const double* grad) {
    auto& m = m_[slot];
    auto& v = v_[slot];
    const double t = static_cast<double>(t_);
    const double correction1 = 1.0 - std::pow(settings_.beta1, t);
    const double correction2 = 1.0 - std::pow(settings_.beta2, t);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double g = grad[i];
        m[i] = settings_.beta1 * m[i] + (1.0 - settings_.beta1) * g;
        v[i] = settings_.beta2 * v[i] + (1.0 - settings_.beta2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        param[i] -= settings_.learning_rate * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
    }
}

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

template <class Input>
Matrix forward_pass(const std::vector<Mlp::Layer>& layers, const Input& x, const Mlp::DropoutMasks& masks,
                    double keep_scale, std::vector<Matrix>* pre, std::vector<Matrix>* post) {
    Matrix h;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z = l == 0 ? Matrix(x * layers[l].weights) : Matrix(h * layers[l].weights);
        z.rowwise() += layers[l].bias.transpose();
        if (l + 1 == layers.size()) return z;
        Matrix a = z.cwiseMax(0.0);
        if (!masks.empty()) a = a.cwiseProduct(masks[l]) * keep_scale;
        if (pre) pre->push_back(std::move(z));
        if (post) post->push_back(a);
        h = std::move(a);
    }
    return h;
}

template <class Input>
double backprop(const std::vector<Mlp::Layer>& layers, const Input& x, const Matrix& y,
                const Mlp::DropoutMasks& masks, double keep_scale, Mlp::Gradients& grads) {
    std::vector<Matrix> pre, post;
    const Matrix out = forward_pass(layers, x, masks, keep_scale, &pre, &post);
    const Matrix diff = out - y;
    const double count = static_cast<double>(diff.size());
    const double loss = std::sqrt(diff.squaredNorm() / count);

    grads.weights.resize(layers.size());
    grads.bias.resize(layers.size());
    if (loss == 0.0) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            grads.weights[l] = Matrix::Zero(layers[l].weights.rows(), layers[l].weights.cols());
            grads.bias[l] = Vector::Zero(layers[l].bias.size());
        }
        return loss;
    }

    // d sqrt(mean(e^2)) / d e = e / (count * loss)
    Matrix delta = diff / (count * loss);
    for (std::size_t l = layers.size(); l-- > 0;) {
        if (l == 0) grads.weights[0] = x.transpose() * delta;
        else grads.weights[l] = post[l - 1].transpose() * delta;
        grads.bias[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        Matrix back = delta * layers[l].weights.transpose();
        const Matrix& z = pre[l - 1];
        for (Eigen::Index i = 0; i < back.size(); ++i) {
            double g = z.data()[i] > 0.0 ? back.data()[i] : 0.0;
            if (!masks.empty()) g *= masks[l - 1].data()[i] * keep_scale;
            back.data()[i] = g;
        }
        delta = std::move(back);
    }
    return loss;
}

SparseRows gather_rows(const SparseRows& source, std::span<const std::size_t> rows) {
    SparseRows out(static_cast<Eigen::Index>(rows.size()), source.cols());
    Eigen::Index nnz = 0;
    for (auto r : rows) nnz += source.outerIndexPtr()[r + 1] - source.outerIndexPtr()[r];
    out.reserve(nnz);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.startVec(static_cast<Eigen::Index>(i));
        for (SparseRows::InnerIterator it(source, static_cast<Eigen::Index>(rows[i])); it; ++it)
            out.insertBack(static_cast<Eigen::Index>(i), it.col()) = it.value();
    }
    out.finalize();
    return out;
}

}  // namespace

Mlp Mlp::initialise(Eigen::Index inputs, const Matrix& y, const MlpConfig& config) {
    if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0))
        throw std::invalid_argument("mlp: dropout rate must lie in [0, 1)");
    Mlp net;
    net.dropout_rate_ = config.dropout_rate;
    Rng rng(derive_seed(config.seed, {0x696e6974ULL}));

    std::vector<Eigen::Index> widths{inputs};
    for (auto w : config.hidden_layers) {
        if (w == 0) throw std::invalid_argument("mlp: hidden layer width must be positive");
        widths.push_back(static_cast<Eigen::Index>(w));
    }
    widths.push_back(y.cols());

    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
        Layer layer;
        layer.weights.resize(widths[l], widths[l + 1]);
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = rng.uniform(-bound, bound);
        layer.bias.resize(widths[l + 1]);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(-bound, bound);
        net.layers_.push_back(std::move(layer));
    }
    if (y.rows() > 0) net.layers_.back().bias = y.colwise().mean().transpose();
    return net;
}

Mlp Mlp::fit(const Matrix& x, const Matrix& y, const MlpConfig& config, std::vector<double>* loss_curve) {
    if (x.rows() < 2) throw std::invalid_argument("mlp: at least two training rows are required");
    if (x.rows() != y.rows()) throw std::invalid_argument("mlp: X and Y row counts differ");
    if (x.hasNaN() || y.hasNaN()) throw std::invalid_argument("mlp: NaN in training data");
    if (config.batch_size == 0) throw std::invalid_argument("mlp: batch size must be positive");

    Mlp net = initialise(x.cols(), y, config);
    Adam adam(config.adam);
    std::vector<std::size_t> weight_slot, bias_slot;
    for (const auto& layer : net.layers_) {
        weight_slot.push_back(adam.add(layer.weights.size()));
        bias_slot.push_back(adam.add(layer.bias.size()));
    }

    const SparseRows sparse_x = x.sparseView();
    const auto n = static_cast<std::size_t>(x.rows());
    const double keep = 1.0 - config.dropout_rate;
    const double keep_scale = 1.0 / keep;
    const bool dropout = config.dropout_rate > 0.0;

    Rng rng(derive_seed(config.seed, {0x747261696eULL}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Gradients grads;
    DropoutMasks masks;
    if (loss_curve) loss_curve->clear();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const SparseRows xb = gather_rows(sparse_x, rows);
            Matrix yb(static_cast<Eigen::Index>(rows.size()), y.cols());
            for (std::size_t i = 0; i < rows.size(); ++i)
                yb.row(static_cast<Eigen::Index>(i)) = y.row(static_cast<Eigen::Index>(rows[i]));

            masks.clear();
            if (dropout) {
                for (std::size_t l = 0; l + 1 < net.layers_.size(); ++l) {
                    Matrix mask(yb.rows(), net.layers_[l].weights.cols());
                    for (Eigen::Index i = 0; i < mask.size(); ++i)
                        mask.data()[i] = rng.uniform01() < keep ? 1.0 : 0.0;
                    masks.push_back(std::move(mask));
                }
            }

            const double loss = backprop(net.layers_, xb, yb, masks, keep_scale, grads);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "mlp: training diverged (non-finite loss) at epoch " << epoch
                    << " with learning rate " << config.adam.learning_rate;
                throw std::runtime_error(msg.str());
            }
            adam.begin_step();
            for (std::size_t l = 0; l < net.layers_.size(); ++l) {
                adam.step(weight_slot[l], net.layers_[l].weights.data(), grads.weights[l].data());
                adam.step(bias_slot[l], net.layers_[l].bias.data(), grads.bias[l].data());
            }
            epoch_loss += loss * static_cast<double>(rows.size());
        }
        if (loss_curve) loss_curve->push_back(epoch_loss / static_cast<double>(n));
    }
    return net;
}

Matrix Mlp::forward(const Matrix& x, const DropoutMasks& masks, std::vector<Matrix>* pre,
                    std::vector<Matrix>* post) const {
    return forward_pass(layers_, x, masks, 1.0 / (1.0 - dropout_rate_), pre, post);
}

Matrix Mlp::predict(const Matrix& x) const {
    if (layers_.empty()) throw std::logic_error("mlp: network is empty");
    if (x.cols() != layers_.front().weights.rows()) throw std::invalid_argument("mlp: input width mismatch");
    return forward(x, {}, nullptr, nullptr);
}

double Mlp::loss(const Matrix& x, const Matrix& y) const {
    const Matrix diff = predict(x) - y;
    return std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
}

double Mlp::loss_and_gradients(const Matrix& x, const Matrix& y, Gradients& grads, const DropoutMasks& masks) const {
    return backprop(layers_, x, y, masks, 1.0 / (1.0 - dropout_rate_), grads);
}

nlohmann::json Mlp::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
        std::vector<double> w(l.weights.data(), l.weights.data() + l.weights.size());
        std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back({{"rows", l.weights.rows()}, {"cols", l.weights.cols()}, {"weights", w}, {"bias", b}});
    }
    return {{"dropout_rate", dropout_rate_}, {"layers", layers}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    Mlp net;
    net.dropout_rate_ = j.at("dropout_rate").get<double>();
    for (const auto& l : j.at("layers")) {
        const auto w = l.at("weights").get<std::vector<double>>();
        const auto b = l.at("bias").get<std::vector<double>>();
        Layer layer;
        layer.weights = Eigen::Map<const Matrix>(w.data(), l.at("rows").get<Eigen::Index>(), l.at("cols").get<Eigen::Index>());
        layer.bias = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

}  // namespace coffee

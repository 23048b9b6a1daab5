#include "coffee/regressor.hpp"

#include "coffee/fingerprint.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coffee {

namespace {

constexpr std::string_view kFormat = "coffee-model";
constexpr int kVersion = 1;

void check_training_inputs(const EncodedMatrix& x, const Matrix& y) {
    if (x.rows() < 2) throw std::invalid_argument("training needs at least two rows");
    if (x.rows() != y.rows()) throw std::invalid_argument("X and Y row counts differ");
    if (y.cols() != static_cast<Eigen::Index>(kSubjectiveCount))
        throw std::invalid_argument("Y must have one column per subjective attribute");
    if (static_cast<std::size_t>(x.cols()) != x.columns.size())
        throw std::invalid_argument("encoded matrix width does not match its column metadata");
    if (x.values.hasNaN() || y.hasNaN()) throw std::invalid_argument("NaN in training data");
}

TrainingMetadata metadata_for(const EncodedMatrix& x, const Matrix& y) {
    TrainingMetadata m;
    m.dataset_fingerprint = matrix_fingerprint(x.values, y);
    m.rows = static_cast<std::size_t>(x.rows());
    return m;
}

}  // namespace

std::string_view to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::forest: return "forest";
        case ModelFamily::svr: return "svr";
        case ModelFamily::mlp: return "mlp";
    }
    return "forest";
}

std::optional<ModelFamily> parse_family(std::string_view text) {
    if (text == "rf" || text == "forest") return ModelFamily::forest;
    if (text == "svr") return ModelFamily::svr;
    if (text == "mlp") return ModelFamily::mlp;
    return std::nullopt;
}

ModelConfig& ModelConfig::reseed(std::uint64_t seed) {
    forest.seed = seed;
    svr.seed = seed;
    mlp.seed = seed;
    return *this;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"forest", c.forest}, {"svr", c.svr}, {"mlp", c.mlp}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    c = ModelConfig{};
    if (j.contains("forest")) c.forest = j["forest"].get<ForestConfig>();
    if (j.contains("svr")) c.svr = j["svr"].get<SvrConfig>();
    if (j.contains("mlp")) c.mlp = j["mlp"].get<MlpConfig>();
}

Matrix clamp_scores(Matrix values) {
    return values.unaryExpr([](double v) { return clamp_score(v); });
}

std::string matrix_fingerprint(const Matrix& x, const Matrix& y) {
    Fingerprint fp;
    for (const Matrix* m : {&x, &y}) {
        fp.update(static_cast<std::uint64_t>(m->rows())).update(static_cast<std::uint64_t>(m->cols()));
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) fp.update((*m)(r, c));
    }
    return fp.hex();
}

TrainedRegressor::TrainedRegressor(Encoder encoder, Model model, ModelConfig config, TrainingMetadata metadata)
    : encoder_(std::move(encoder)), model_(std::move(model)), config_(std::move(config)), metadata_(std::move(metadata)) {}

ModelFamily TrainedRegressor::family() const {
    return static_cast<ModelFamily>(model_.index());
}

Matrix TrainedRegressor::predict_raw(const Matrix& x) const {
    return std::visit([&](const auto& m) { return Matrix(m.predict(x)); }, model_);
}

Matrix TrainedRegressor::predict(const EncodedMatrix& x) const {
    if (x.columns != encoder_.columns())
        throw std::invalid_argument("predict: input columns do not match the model's encoder");
    return clamp_scores(predict_raw(x.values));
}

Matrix TrainedRegressor::predict(std::span<const BeanProperties> beans, TransformLog* log) const {
    return clamp_scores(predict_raw(encoder_.transform(beans, log).values));
}

Matrix TrainedRegressor::predict(std::span<const CoffeeRecord> records, TransformLog* log) const {
    return clamp_scores(predict_raw(encoder_.transform(records, log).values));
}

std::string TrainedRegressor::serialize() const {
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["family"] = to_string(family());
    j["config"] = config_;
    j["encoder"] = encoder_.to_json();
    j["metadata"] = {{"dataset_fingerprint", metadata_.dataset_fingerprint},
                     {"rows", metadata_.rows},
                     {"converged", metadata_.converged},
                     {"loss_curve", metadata_.loss_curve}};
    j["model"] = std::visit([](const auto& m) { return m.to_json(); }, model_);
    return j.dump() + "\n";
}

TrainedRegressor TrainedRegressor::deserialize(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != kFormat) throw std::runtime_error("not a coffee model file");
    if (j.value("version", 0) != kVersion)
        throw std::runtime_error("unsupported model file version " + std::to_string(j.value("version", 0)));
    const auto family = parse_family(j.at("family").get<std::string>());
    if (!family) throw std::runtime_error("unknown model family '" + j.at("family").get<std::string>() + "'");

    TrainingMetadata meta;
    const auto& jm = j.at("metadata");
    meta.dataset_fingerprint = jm.at("dataset_fingerprint").get<std::string>();
    meta.rows = jm.at("rows").get<std::size_t>();
    meta.converged = jm.at("converged").get<bool>();
    meta.loss_curve = jm.at("loss_curve").get<std::vector<double>>();

    const auto& jmodel = j.at("model");
    Model model = [&]() -> Model {
        switch (*family) {
            case ModelFamily::forest: return RandomForest::from_json(jmodel);
            case ModelFamily::svr: return SvrEnsemble::from_json(jmodel);
            case ModelFamily::mlp: return Mlp::from_json(jmodel);
        }
        throw std::logic_error("unreachable");
    }();
    return {Encoder::from_json(j.at("encoder")), std::move(model), j.at("config").get<ModelConfig>(), std::move(meta)};
}

void TrainedRegressor::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path.string());
    out << serialize();
    if (!out) throw std::runtime_error("failed writing model file: " + path.string());
}

TrainedRegressor TrainedRegressor::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize(buffer.str());
}

std::string TrainedRegressor::fingerprint() const {
    return Fingerprint{}.update(serialize()).hex();
}

TrainedRegressor fit_forest(const Encoder& encoder, const EncodedMatrix& x, const Matrix& y, const ForestConfig& cfg) {
    check_training_inputs(x, y);
    ModelConfig config;
    config.forest = cfg;
    return {encoder, RandomForest::fit(x.values, y, cfg), config, metadata_for(x, y)};
}

TrainedRegressor fit_svr(const Encoder& encoder, const EncodedMatrix& x, const Matrix& y, const SvrConfig& cfg) {
    check_training_inputs(x, y);
    ModelConfig config;
    config.svr = cfg;
    auto ensemble = SvrEnsemble::fit(x.values, y, cfg);
    auto meta = metadata_for(x, y);
    meta.converged = ensemble.converged();
    return {encoder, std::move(ensemble), config, std::move(meta)};
}

TrainedRegressor fit_mlp(const Encoder& encoder, const EncodedMatrix& x, const Matrix& y, const MlpConfig& cfg) {
    check_training_inputs(x, y);
    ModelConfig config;
    config.mlp = cfg;
    auto meta = metadata_for(x, y);
    auto net = Mlp::fit(x.values, y, cfg, &meta.loss_curve);
    return {encoder, std::move(net), config, std::move(meta)};
}

TrainedRegressor train_regressor(std::span<const CoffeeRecord> records, ModelFamily family, const ModelConfig& config) {
    if (records.empty()) throw std::invalid_argument("training needs at least two rows");
    auto encoder = Encoder::fit(records);
    const auto x = encoder.transform(records);
    const auto y = subjective_matrix(records);
    TrainedRegressor model = [&] {
        switch (family) {
            case ModelFamily::forest: return fit_forest(encoder, x, y, config.forest);
            case ModelFamily::svr: return fit_svr(encoder, x, y, config.svr);
            case ModelFamily::mlp: return fit_mlp(encoder, x, y, config.mlp);
        }
        throw std::logic_error("unreachable");
    }();
    // Keep the full config so the model file records every section.
    return {model.encoder(), model.model(), config, model.metadata()};
}

}  // namespace coffee

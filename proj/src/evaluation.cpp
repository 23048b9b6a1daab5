#include "coffee/evaluation.hpp"

#include "coffee/csv.hpp"
#include "coffee/fingerprint.hpp"
#include "coffee/parallel.hpp"
#include "coffee/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace coffee {

Vector rmse(const Matrix& pred, const Matrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("rmse: prediction and truth shapes differ");
    if (pred.rows() == 0) throw std::invalid_argument("rmse: empty input");
    return ((pred - truth).array().square().colwise().sum() / static_cast<double>(pred.rows())).sqrt().transpose();
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("folds must be at least 2");
    if (n < folds) throw std::invalid_argument("cannot split " + std::to_string(n) + " records into " +
                                               std::to_string(folds) + " folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {0x666f6c6473ULL}));
    rng.shuffle(order.begin(), order.end());
    std::vector<std::size_t> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % folds;
    return fold;
}

CvReport cross_validate(std::span<const CoffeeRecord> records, ModelFamily family, const ModelConfig& config,
                        std::size_t folds, std::uint64_t seed) {
    const auto assignment = fold_assignment(records.size(), folds, seed);
    CvReport report;
    report.family = family;
    report.folds = folds;
    report.seed = seed;
    report.per_fold.resize(folds);
    std::vector<bool> converged(folds, true);

    parallel_for(folds, [&](std::size_t f) {
        std::vector<CoffeeRecord> train, validation;
        for (std::size_t i = 0; i < records.size(); ++i)
            (assignment[i] == f ? validation : train).push_back(records[i]);
        const auto model = train_regressor(train, family, config);
        const auto pred = model.predict(std::span<const CoffeeRecord>(validation));
        auto& out = report.per_fold[f];
        out.rmse = rmse(pred, subjective_matrix(validation));
        out.train_rows = train.size();
        out.validation_rows = validation.size();
        out.training_fingerprint = model.metadata().dataset_fingerprint;
        out.encoder_fingerprint = Fingerprint{}.update(model.encoder().to_json().dump()).hex();
        converged[f] = model.metadata().converged;
    });

    report.per_attribute = Vector::Zero(static_cast<Eigen::Index>(kSubjectiveCount));
    for (const auto& f : report.per_fold) report.per_attribute += f.rmse;
    report.per_attribute /= static_cast<double>(folds);
    report.average = report.per_attribute.mean();
    report.converged = std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
    return report;
}

void to_json(nlohmann::json& j, const CvReport& r) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json attrs;
    for (std::size_t a = 0; a < kSubjectiveCount; ++a)
        attrs[std::string(kSubjectiveNames[a])] = r.per_attribute[static_cast<Eigen::Index>(a)];
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.per_fold)
        folds.push_back({{"rmse", vec(f.rmse)},
                         {"train_rows", f.train_rows},
                         {"validation_rows", f.validation_rows},
                         {"training_fingerprint", f.training_fingerprint}});
    j = {{"model", to_string(r.family)}, {"folds", r.folds},         {"seed", r.seed},
         {"per_attribute_rmse", attrs},  {"average_rmse", r.average}, {"per_fold", folds},
         {"converged", r.converged}};
}

void write_cv_table(std::ostream& out, std::span<const CvReport> reports) {
    const std::vector<std::string> header{"model", "average_rmse"};
    csv::write_row(out, header, '\t');
    for (const auto& r : reports) {
        const std::vector<std::string> row{std::string(to_string(r.family)), csv::format_double(r.average)};
        csv::write_row(out, row, '\t');
    }
}

MlpSearchResult random_search_mlp(std::span<const CoffeeRecord> records, const MlpSearchSpace& space,
                                  std::size_t budget, std::uint64_t seed, std::size_t folds) {
    if (budget < 1) throw std::invalid_argument("random search budget must be at least 1");
    if (space.widths.empty() || space.depths.empty() || space.dropout_rates.empty() ||
        space.learning_rates.empty() || space.batch_sizes.empty())
        throw std::invalid_argument("random search space has an empty dimension");

    Rng rng(derive_seed(seed, {0x736561726368ULL}));
    auto pick = [&](const auto& options) { return options[rng.uniform_index(options.size())]; };
    MlpSearchResult result;
    for (std::size_t s = 0; s < budget; ++s) {
        MlpConfig cfg = space.base;
        const auto width = pick(space.widths);
        cfg.hidden_layers.assign(pick(space.depths), width);
        cfg.dropout_rate = pick(space.dropout_rates);
        cfg.adam.learning_rate = pick(space.learning_rates);
        cfg.batch_size = pick(space.batch_sizes);
        cfg.seed = derive_seed(seed, {s});
        result.trials.push_back({cfg, 0.0});
    }
    for (auto& trial : result.trials) {
        ModelConfig mc;
        mc.mlp = trial.config;
        trial.cv_rmse = cross_validate(records, ModelFamily::mlp, mc, folds, seed).average;
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < result.trials.size(); ++s)
        if (result.trials[s].cv_rmse < result.trials[best].cv_rmse) best = s;
    result.best = result.trials[best].config;
    result.cv_rmse = result.trials[best].cv_rmse;
    return result;
}

}  // namespace coffee

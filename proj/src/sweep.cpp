#include "coffee/sweep.hpp"

#include "coffee/csv.hpp"
#include "coffee/kde.hpp"
#include "coffee/parallel.hpp"
#include "coffee/partition.hpp"
#include "coffee/recommender.hpp"
#include "coffee/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace coffee {

Predictor regressor_predictor(ModelFamily family, ModelConfig config) {
    return [family, config](std::span<const CoffeeRecord> reviewed, std::span<const CoffeeRecord> hidden,
                            std::uint64_t seed) {
        auto cfg = config;
        cfg.reseed(seed);
        return train_regressor(reviewed, family, cfg).predict(hidden);
    };
}

Predictor oracle_predictor() {
    return [](std::span<const CoffeeRecord>, std::span<const CoffeeRecord> hidden, std::uint64_t) {
        return subjective_matrix(hidden);
    };
}

AccuracyReport accuracy_sweep(std::span<const CoffeeRecord> records, const SweepConfig& config,
                              const Predictor& predictor) {
    if (config.k < 1) throw std::invalid_argument("k must be at least 1");
    if (config.k > records.size())
        throw std::invalid_argument("k = " + std::to_string(config.k) + " exceeds the dataset size " +
                                    std::to_string(records.size()));
    if (config.n_users < 1) throw std::invalid_argument("at least one simulated user is required");
    if (config.repetitions < 1) throw std::invalid_argument("at least one repetition is required");
    for (double m : config.m_values)
        if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("prediction size m must lie in [0, 1]");

    const Predictor predict = predictor ? predictor : regressor_predictor(config.family, config.model);
    const auto ground = RecommendationSpace::build(records, {});
    const auto users = sample_users(fit_kde(subjective_matrix(records), derive_seed(config.seed, {0x6b6465ULL})),
                                    config.n_users);
    auto user_vector = [&](std::size_t u) {
        SubjectiveVector v{};
        for (std::size_t a = 0; a < kSubjectiveCount; ++a)
            v[a] = users(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(a));
        return v;
    };
    std::vector<std::vector<std::size_t>> ground_top(config.n_users);
    for (std::size_t u = 0; u < config.n_users; ++u) ground_top[u] = ground.nearest_ids(user_vector(u), config.k);

    std::vector<std::size_t> index_of(records.empty() ? 0 : records.back().id + 1);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].id >= index_of.size()) index_of.resize(records[i].id + 1);
        index_of[records[i].id] = i;
    }

    AccuracyReport report;
    report.k = config.k;
    report.n_users = config.n_users;
    report.repetitions = config.repetitions;
    report.seed = config.seed;
    report.family = config.family;
    report.per_user.assign(config.m_values.size(),
                           std::vector<std::vector<double>>(config.repetitions, std::vector<double>(config.n_users)));
    std::vector<std::size_t> hidden_sizes(config.m_values.size());

    const std::size_t cells = config.m_values.size() * config.repetitions;
    parallel_for(cells, [&](std::size_t cell) {
        const std::size_t mi = cell / config.repetitions;
        const std::size_t rep = cell % config.repetitions;
        const std::uint64_t cell_seed = derive_seed(config.seed, {mi, rep});
        const auto split = partition(records, config.m_values[mi], cell_seed);
        hidden_sizes[mi] = split.hidden_ids.size();
        auto& acc = report.per_user[mi][rep];
        if (split.hidden_ids.empty()) {
            std::fill(acc.begin(), acc.end(), 1.0);
            return;
        }
        if (split.reviewed_ids.size() < 2)
            throw std::invalid_argument("prediction size leaves fewer than two reviewed records to train on");

        std::vector<CoffeeRecord> reviewed, hidden;
        for (auto id : split.reviewed_ids) reviewed.push_back(records[index_of[id]]);
        for (auto id : split.hidden_ids) hidden.push_back(records[index_of[id]]);
        const Matrix pred = predict(reviewed, hidden, derive_seed(cell_seed, {0x6d6f64656cULL}));
        if (pred.rows() != static_cast<Eigen::Index>(hidden.size()) ||
            pred.cols() != static_cast<Eigen::Index>(kSubjectiveCount))
            throw std::runtime_error("predictor returned a matrix of the wrong shape");

        std::vector<PredictedBean> predicted;
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            PredictedBean b;
            b.bean_id = hidden[i].id;
            for (std::size_t a = 0; a < kSubjectiveCount; ++a)
                b.subjective[a] = clamp_score(pred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)));
            b.display = display_of(hidden[i].properties);
            predicted.push_back(std::move(b));
        }
        const auto space = RecommendationSpace::build(reviewed, predicted);
        for (std::size_t u = 0; u < config.n_users; ++u)
            acc[u] = rec_acc(ground_top[u], space.nearest_ids(user_vector(u), config.k));
    });

    for (std::size_t mi = 0; mi < config.m_values.size(); ++mi) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& rep : report.per_user[mi])
            for (double a : rep) {
                sum += a;
                ++count;
            }
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (const auto& rep : report.per_user[mi])
            for (double a : rep) ss += (a - mean) * (a - mean);
        report.rows.push_back({config.m_values[mi], mean, std::sqrt(ss / static_cast<double>(count)), hidden_sizes[mi]});
    }
    return report;
}

void to_json(nlohmann::json& j, const AccuracyReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"m", row.m}, {"accuracy_mean", row.mean}, {"accuracy_std", row.std}, {"hidden", row.hidden}});
    j = {{"k", r.k},
         {"n_users", r.n_users},
         {"repetitions", r.repetitions},
         {"seed", r.seed},
         {"model", to_string(r.family)},
         {"results", rows},
         {"per_user", r.per_user}};
}

void write_accuracy_table(std::ostream& out, const AccuracyReport& report) {
    const std::vector<std::string> header{"prediction_size", "accuracy_mean", "accuracy_std"};
    csv::write_row(out, header, '\t');
    for (const auto& row : report.rows) {
        const std::vector<std::string> cells{csv::format_double(row.m), csv::format_double(row.mean),
                                             csv::format_double(row.std)};
        csv::write_row(out, cells, '\t');
    }
}

}  // namespace coffee

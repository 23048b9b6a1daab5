#pragma once

#include "coffee/dataset.hpp"
#include "coffee/regressor.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace coffee {

// Fills in subjective scores for the hidden records (one 8-wide row each)
// using only the reviewed ones. seed is the cell's own stream.
using Predictor = std::function<Matrix(std::span<const CoffeeRecord> reviewed,
                                       std::span<const CoffeeRecord> hidden, std::uint64_t seed)>;

// Trains family on the reviewed records and predicts the hidden ones.
Predictor regressor_predictor(ModelFamily family, ModelConfig config);
// Returns the hidden records' true scores.
Predictor oracle_predictor();

struct SweepConfig {
    std::size_t k = 5;
    std::vector<double> m_values{0.10, 0.20, 0.33, 0.50};
    std::size_t n_users = 100;
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;
    ModelFamily family = ModelFamily::forest;
    ModelConfig model;
};

struct AccuracyRow {
    double m = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population deviation over users x repetitions
    std::size_t hidden = 0;
};

struct AccuracyReport {
    std::size_t k = 0;
    std::size_t n_users = 0;
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
    ModelFamily family = ModelFamily::forest;
    std::vector<AccuracyRow> rows;                          // one per m, in input order
    std::vector<std::vector<std::vector<double>>> per_user; // [m][repetition][user]
};

/// For each (m, repetition): hide a fraction m of the records, predict their
/// scores from the rest, and compare each simulated user's top-k in that
/// space with the top-k in the fully reviewed space. Users are drawn once
/// from a KDE fitted on all subjective scores.
AccuracyReport accuracy_sweep(std::span<const CoffeeRecord> records, const SweepConfig& config,
                              const Predictor& predictor = {});

void to_json(nlohmann::json& j, const AccuracyReport& r);
// prediction_size, accuracy_mean, accuracy_std
void write_accuracy_table(std::ostream& out, const AccuracyReport& report);

}  // namespace coffee

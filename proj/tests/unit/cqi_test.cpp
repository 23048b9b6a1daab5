// Checks that only mean something on the real CQI review table. Set
// COFFEE_CQI_CSV (or configure with -DCOFFEE_CQI_CSV=...) to run them.

#include "coffee/dataset.hpp"
#include "coffee/evaluation.hpp"
#include "coffee/feature_selection.hpp"
#include "coffee/forest.hpp"
#include "coffee/partition.hpp"
#include "coffee/regressor.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

using namespace coffee;

namespace {

std::filesystem::path cqi_path() {
    if (const char* env = std::getenv("COFFEE_CQI_CSV"); env && *env) return env;
    return COFFEE_CQI_CSV_DEFAULT;
}

class Cqi : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        if (!std::filesystem::exists(cqi_path())) return;
        raw_ = new std::vector<RawReview>(load_csv(cqi_path()));
        records_ = new std::vector<CoffeeRecord>(clean(*raw_));
    }
    static void TearDownTestSuite() {
        delete raw_;
        delete records_;
        raw_ = nullptr;
        records_ = nullptr;
    }
    void SetUp() override {
        if (!raw_) GTEST_SKIP() << "NOT RUN: CQI file not found at " << cqi_path();
    }
    static std::vector<RawReview>* raw_;
    static std::vector<CoffeeRecord>* records_;
};

std::vector<RawReview>* Cqi::raw_ = nullptr;
std::vector<CoffeeRecord>* Cqi::records_ = nullptr;

}  // namespace

TEST_F(Cqi, RawReviewCountsBySpecies) {
    EXPECT_EQ(raw_->size(), 1340u);
    std::size_t arabica = 0, robusta = 0;
    for (const auto& r : *raw_) {
        std::string s = r.get_text("species").value_or("");
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        arabica += s == "arabica";
        robusta += s == "robusta";
    }
    EXPECT_EQ(arabica, 1312u);
    EXPECT_EQ(robusta, 28u);
}

TEST_F(Cqi, CleanedCountMatchesFixture) {
    const auto fixture = std::filesystem::path(COFFEE_FIXTURE_DIR) / "cqi_n_clean.txt";
    ::testing::Test::RecordProperty("n_clean", static_cast<int>(records_->size()));
    std::ifstream in(fixture);
    std::size_t frozen = 0;
    if (!(in >> frozen)) GTEST_SKIP() << "n_clean = " << records_->size() << "; no frozen value in " << fixture;
    EXPECT_EQ(records_->size(), frozen);
}

TEST_F(Cqi, FlavourAndAftertasteCorrelate) {
    const auto p = pearson_matrix(*records_);
    const auto at = [&](std::string_view name) {
        return static_cast<Eigen::Index>(std::find(p.attributes.begin(), p.attributes.end(), name) - p.attributes.begin());
    };
    EXPECT_GT(p.values(at("flavour"), at("aftertaste")), 0.5);
}

TEST_F(Cqi, AltitudeRanksBelowRetainedFeatures) {
    const auto m = selection_candidates(*raw_, *records_);
    const auto scores = univariate_scores(m.values, subjective_matrix(*records_));
    std::map<std::string, double> feature;
    std::vector<double> altitude;
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        const double s = scores.mean[static_cast<Eigen::Index>(c)];
        const auto& name = m.columns[c].source_feature;
        if (name.rfind("altitude", 0) == 0) altitude.push_back(s);
        else feature[name] = std::max(feature[name], s);
    }
    ASSERT_EQ(altitude.size(), 3u);
    std::vector<double> retained;
    for (const auto& [name, s] : feature) retained.push_back(s);
    std::sort(retained.begin(), retained.end());
    const double median = retained[retained.size() / 2];
    for (double a : altitude) EXPECT_LT(a, median);
}

TEST_F(Cqi, MoreTreesDoNotHurtHeldOut) {
    const auto p = partition(*records_, 0.2, 1);
    std::map<std::size_t, const CoffeeRecord*> by_id;
    for (const auto& r : *records_) by_id[r.id] = &r;
    std::vector<CoffeeRecord> train, held;
    for (auto id : p.reviewed_ids) train.push_back(*by_id.at(id));
    for (auto id : p.hidden_ids) held.push_back(*by_id.at(id));
    auto held_rmse = [&](std::size_t trees) {
        ModelConfig cfg;
        cfg.forest.n_trees = trees;
        const auto model = train_regressor(train, ModelFamily::forest, cfg);
        return rmse(model.predict(std::span<const CoffeeRecord>(held)), subjective_matrix(held)).mean();
    };
    EXPECT_LE(held_rmse(20), held_rmse(1));
}

TEST_F(Cqi, RandomSearchBeatsSmallBaseline) {
    MlpSearchSpace space;
    space.base.epochs = 50;
    const auto found = random_search_mlp(*records_, space, 6, 0, 5);
    ModelConfig baseline;
    baseline.mlp = space.base;
    baseline.mlp.hidden_layers = {16};
    const double base_rmse = cross_validate(*records_, ModelFamily::mlp, baseline, 5, 0).average;
    EXPECT_LE(found.cv_rmse, base_rmse);
}

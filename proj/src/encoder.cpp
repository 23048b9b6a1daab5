#include "coffee/encoder.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace coffee {

namespace {

constexpr std::array<std::string_view, 6> kCategoricalFeatures = {
    "species", "country_of_origin", "region", "variety", "color", "processing_method"};
constexpr std::array<std::string_view, 3> kNumericFeatures = {
    "moisture", "category_one_defects", "category_two_defects"};

std::string label_of(const BeanProperties& b, std::string_view feature) {
    if (feature == "species") return std::string(to_string(b.species));
    if (feature == "country_of_origin") return b.country_of_origin;
    if (feature == "region") return b.region;
    if (feature == "variety") return b.variety;
    if (feature == "color") return b.color;
    if (feature == "processing_method") return b.processing_method;
    throw std::logic_error("unknown categorical feature");
}

double value_of(const BeanProperties& b, std::string_view feature) {
    if (feature == "moisture") return b.moisture;
    if (feature == "category_one_defects") return b.category_one_defects;
    if (feature == "category_two_defects") return b.category_two_defects;
    throw std::logic_error("unknown numeric feature");
}

}  // namespace

std::string ColumnInfo::name() const {
    return category ? source_feature + ":" + *category : source_feature;
}

std::size_t TransformLog::total() const {
    std::size_t n = 0;
    for (const auto& [_, count] : unseen) n += count;
    return n;
}

Encoder Encoder::fit(std::span<const BeanProperties> beans) {
    if (beans.empty()) throw std::invalid_argument("encode: record list is empty");
    Encoder e;
    for (auto feature : kCategoricalFeatures) {
        Vocabulary v{std::string(feature), {}};
        if (feature == "species") {
            v.labels = {"arabica", "robusta"};
        } else {
            std::set<std::string> labels;
            for (const auto& b : beans) labels.insert(label_of(b, feature));
            v.labels.assign(labels.begin(), labels.end());
        }
        e.vocabularies_.push_back(std::move(v));
    }
    const double n = static_cast<double>(beans.size());
    for (auto feature : kNumericFeatures) {
        double sum = 0.0;
        for (const auto& b : beans) sum += value_of(b, feature);
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& b : beans) {
            const double d = value_of(b, feature) - mean;
            ss += d * d;
        }
        double scale = beans.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        if (!(scale > 0.0)) scale = 1.0;
        e.moments_.push_back({std::string(feature), mean, scale});
    }
    e.rebuild_columns();
    return e;
}

Encoder Encoder::fit(std::span<const CoffeeRecord> records) {
    const auto beans = properties_of(records);
    return fit(beans);
}

void Encoder::rebuild_columns() {
    columns_.clear();
    for (const auto& v : vocabularies_)
        for (const auto& label : v.labels)
            columns_.push_back({v.feature, EncodingKind::one_hot, label});
    for (const auto& m : moments_) columns_.push_back({m.feature, EncodingKind::standardized, std::nullopt});
}

EncodedMatrix Encoder::transform(std::span<const BeanProperties> beans, TransformLog* log) const {
    EncodedMatrix out;
    out.columns = columns_;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(beans.size()),
                              static_cast<Eigen::Index>(columns_.size()));
    for (std::size_t i = 0; i < beans.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        Eigen::Index offset = 0;
        for (const auto& v : vocabularies_) {
            const auto label = label_of(beans[i], v.feature);
            auto it = std::lower_bound(v.labels.begin(), v.labels.end(), label);
            if (v.feature == "species") it = std::find(v.labels.begin(), v.labels.end(), label);
            if (it != v.labels.end() && *it == label) {
                out.values(row, offset + (it - v.labels.begin())) = 1.0;
            } else if (log) {
                ++log->unseen[v.feature];
            }
            offset += static_cast<Eigen::Index>(v.labels.size());
        }
        for (const auto& m : moments_) {
            out.values(row, offset++) = (value_of(beans[i], m.feature) - m.mean) / m.scale;
        }
    }
    return out;
}

EncodedMatrix Encoder::transform(std::span<const CoffeeRecord> records, TransformLog* log) const {
    const auto beans = properties_of(records);
    return transform(beans, log);
}

nlohmann::json Encoder::to_json() const {
    nlohmann::json j;
    j["vocabularies"] = nlohmann::json::array();
    for (const auto& v : vocabularies_) j["vocabularies"].push_back({{"feature", v.feature}, {"labels", v.labels}});
    j["moments"] = nlohmann::json::array();
    for (const auto& m : moments_)
        j["moments"].push_back({{"feature", m.feature}, {"mean", m.mean}, {"scale", m.scale}});
    return j;
}

Encoder Encoder::from_json(const nlohmann::json& j) {
    Encoder e;
    for (const auto& v : j.at("vocabularies"))
        e.vocabularies_.push_back({v.at("feature").get<std::string>(), v.at("labels").get<std::vector<std::string>>()});
    for (const auto& m : j.at("moments"))
        e.moments_.push_back({m.at("feature").get<std::string>(), m.at("mean").get<double>(), m.at("scale").get<double>()});
    e.rebuild_columns();
    return e;
}

EncodedMatrix encode(std::span<const CoffeeRecord> records) {
    return Encoder::fit(records).transform(records);
}

}  // namespace coffee

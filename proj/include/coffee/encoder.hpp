#pragma once

#include "coffee/dataset.hpp"
#include "coffee/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coffee {

enum class EncodingKind { one_hot, standardized };

struct ColumnInfo {
    std::string source_feature;
    EncodingKind kind = EncodingKind::one_hot;
    std::optional<std::string> category;  // set for one-hot columns only

    std::string name() const;  // "species:arabica", "moisture"
    bool operator==(const ColumnInfo&) const = default;
};

struct EncodedMatrix {
    std::vector<ColumnInfo> columns;
    Matrix values;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

struct TransformLog {
    std::map<std::string, std::size_t> unseen;  // feature -> rows with an unseen label
    std::size_t total() const;
};

/// One-hot for the categorical properties (species, country, region, variety,
/// color, processing method) and z-scores for moisture and both defect
/// counts. Vocabularies and moments come from the records passed to fit(),
/// so a stored encoder maps new data onto identical columns. Labels unseen
/// at fit time encode as an all-zero block and are counted in the log.
class Encoder {
public:
    static Encoder fit(std::span<const BeanProperties> beans);
    static Encoder fit(std::span<const CoffeeRecord> records);

    EncodedMatrix transform(std::span<const BeanProperties> beans, TransformLog* log = nullptr) const;
    EncodedMatrix transform(std::span<const CoffeeRecord> records, TransformLog* log = nullptr) const;

    const std::vector<ColumnInfo>& columns() const { return columns_; }

    nlohmann::json to_json() const;
    static Encoder from_json(const nlohmann::json& j);

    bool operator==(const Encoder&) const = default;

private:
    struct Vocabulary {
        std::string feature;
        std::vector<std::string> labels;  // sorted; species keeps {arabica, robusta}
        bool operator==(const Vocabulary&) const = default;
    };
    struct Moments {
        std::string feature;
        double mean = 0.0;
        double scale = 1.0;  // sample standard deviation, 1 when degenerate
        bool operator==(const Moments&) const = default;
    };

    void rebuild_columns();

    std::vector<Vocabulary> vocabularies_;
    std::vector<Moments> moments_;
    std::vector<ColumnInfo> columns_;
};

EncodedMatrix encode(std::span<const CoffeeRecord> records);

}  // namespace coffee

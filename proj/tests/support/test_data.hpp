#pragma once

#include "coffee/dataset.hpp"
#include "coffee/recommender.hpp"
#include "synthetic.hpp"

#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace coffee::test {

// Minimal review table: the required columns, every cell valid unless a
// row overrides it.
inline std::string review_csv(const std::vector<std::map<std::string, std::string>>& rows) {
    static const std::vector<std::pair<std::string, std::string>> columns{
        {"Species", "Arabica"}, {"Country.of.Origin", "Ethiopia"}, {"Region", "guji"},
        {"Variety", "Heirloom"}, {"Color", "Green"},               {"Category.One.Defects", "0"},
        {"Category.Two.Defects", "1"}, {"Processing.Method", "Washed / Wet"}, {"Moisture", "0.11"},
        {"Aroma", "8.17"},     {"Flavor", "8.25"},                 {"Body", "7.92"},
        {"Sweetness", "10"},   {"Acidity", "8.08"},                {"Balance", "8"},
        {"Uniformity", "10"},  {"Aftertaste", "8.08"}};
    std::ostringstream out;
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c].first;
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            auto it = row.find(columns[c].first);
            out << (c ? "," : "") << (it == row.end() ? columns[c].second : it->second);
        }
        out << "\n";
    }
    return out.str();
}

inline std::vector<RawReview> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_reviews(in, required_review_columns());
}

inline std::vector<CoffeeRecord> small_dataset(std::size_t rows = 240, std::uint64_t seed = 3) {
    synthetic::Options o;
    o.rows = rows;
    o.robusta = rows / 40;
    o.seed = seed;
    o.include_invalid = false;
    return synthetic::records(o);
}

inline SpaceEntry entry(std::size_t id, SubjectiveVector v, Provenance p = Provenance::reviewed) {
    return {id, v, p, {}};
}

}  // namespace coffee::test

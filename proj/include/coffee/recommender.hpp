#pragma once

#include "coffee/dataset.hpp"
#include "coffee/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coffee {

enum class Provenance { reviewed, predicted };
std::string_view to_string(Provenance provenance);

struct DisplayMetadata {
    std::string species;
    std::string country_of_origin;
    std::string region;
    std::string variety;
    std::string processing_method;
    bool operator==(const DisplayMetadata&) const = default;
};

DisplayMetadata display_of(const BeanProperties& properties);

struct SpaceEntry {
    std::size_t bean_id = 0;
    SubjectiveVector subjective{};
    Provenance provenance = Provenance::reviewed;
    DisplayMetadata display;
    bool operator==(const SpaceEntry&) const = default;
};

struct PredictedBean {
    std::size_t bean_id = 0;
    SubjectiveVector subjective{};
    DisplayMetadata display;
};

struct Recommendation {
    std::size_t rank = 0;  // 1-based
    std::size_t bean_id = 0;
    double distance = 0.0;
    double match_score = 1.0;  // 1 / (1 + distance), for display
    Provenance provenance = Provenance::reviewed;
    DisplayMetadata display;
};

/// Immutable set of beans in the 8-dimensional subjective space, ordered by
/// bean id, answering exact Euclidean kNN queries.
class RecommendationSpace {
public:
    static RecommendationSpace build(std::span<const CoffeeRecord> reviewed, std::span<const PredictedBean> predicted,
                                     std::string_view model_fingerprint = {});
    static RecommendationSpace build(std::vector<SpaceEntry> entries, std::string_view model_fingerprint = {});

    // Top k by (distance, bean_id). Query components must lie in [0, 10].
    std::vector<Recommendation> recommend(const SubjectiveVector& u, std::size_t k) const;
    // Ids only; skips building the display records.
    std::vector<std::size_t> nearest_ids(const SubjectiveVector& u, std::size_t k) const;

    const std::vector<SpaceEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const SpaceEntry* find(std::size_t bean_id) const;

    std::string_view metric() const { return "euclidean"; }
    const std::string& fingerprint() const { return fingerprint_; }

private:
    std::vector<std::size_t> top_k(const SubjectiveVector& u, std::size_t k, std::vector<double>* distances) const;

    std::vector<SpaceEntry> entries_;
    std::vector<double> coords_;  // entries x 8, row-major
    std::string fingerprint_;
};

// |ground ∩ pred| / k for two equally long lists of unique ids.
double rec_acc(std::span<const std::size_t> ground, std::span<const std::size_t> pred);

// bean_id, provenance, the eight scores, then the display fields.
void export_space_tsv(std::ostream& out, const RecommendationSpace& space);

}  // namespace coffee

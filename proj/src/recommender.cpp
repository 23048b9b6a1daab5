#include "coffee/recommender.hpp"

#include "coffee/csv.hpp"
#include "coffee/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

namespace coffee {

std::string_view to_string(Provenance provenance) {
    return provenance == Provenance::reviewed ? "reviewed" : "predicted";
}

DisplayMetadata display_of(const BeanProperties& p) {
    return {std::string(to_string(p.species)), p.country_of_origin, p.region, p.variety, p.processing_method};
}

RecommendationSpace RecommendationSpace::build(std::span<const CoffeeRecord> reviewed,
                                               std::span<const PredictedBean> predicted,
                                               std::string_view model_fingerprint) {
    std::vector<SpaceEntry> entries;
    entries.reserve(reviewed.size() + predicted.size());
    for (const auto& r : reviewed)
        entries.push_back({r.id, r.subjective, Provenance::reviewed, display_of(r.properties)});
    for (const auto& p : predicted) entries.push_back({p.bean_id, p.subjective, Provenance::predicted, p.display});
    return build(std::move(entries), model_fingerprint);
}

RecommendationSpace RecommendationSpace::build(std::vector<SpaceEntry> entries, std::string_view model_fingerprint) {
    std::sort(entries.begin(), entries.end(),
              [](const SpaceEntry& a, const SpaceEntry& b) { return a.bean_id < b.bean_id; });
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].bean_id == entries[i - 1].bean_id)
            throw std::invalid_argument("duplicate bean id " + std::to_string(entries[i].bean_id) +
                                        " in recommendation space");
    for (const auto& e : entries)
        for (double s : e.subjective)
            if (!valid_score(s))
                throw std::invalid_argument("bean " + std::to_string(e.bean_id) + " has a score outside (0, 10]");

    RecommendationSpace space;
    space.coords_.reserve(entries.size() * kSubjectiveCount);
    Fingerprint fp;
    fp.update(model_fingerprint).update(static_cast<std::uint64_t>(entries.size()));
    for (const auto& e : entries) {
        fp.update(static_cast<std::uint64_t>(e.bean_id)).update(to_string(e.provenance));
        for (double s : e.subjective) {
            space.coords_.push_back(s);
            fp.update(s);
        }
    }
    space.fingerprint_ = fp.hex();
    space.entries_ = std::move(entries);
    return space;
}

const SpaceEntry* RecommendationSpace::find(std::size_t bean_id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), bean_id,
                               [](const SpaceEntry& e, std::size_t id) { return e.bean_id < id; });
    return it != entries_.end() && it->bean_id == bean_id ? &*it : nullptr;
}

std::vector<std::size_t> RecommendationSpace::top_k(const SubjectiveVector& u, std::size_t k,
                                                    std::vector<double>* distances) const {
    if (entries_.empty()) throw std::invalid_argument("recommendation space is empty");
    if (k < 1 || k > entries_.size())
        throw std::invalid_argument("k must lie in [1, " + std::to_string(entries_.size()) + "], got " +
                                    std::to_string(k));
    for (std::size_t a = 0; a < kSubjectiveCount; ++a)
        if (!(u[a] >= 0.0 && u[a] <= kScoreCeiling))
            throw std::invalid_argument("preference '" + std::string(kSubjectiveNames[a]) + "' must lie in [0, 10]");

    const std::size_t n = entries_.size();
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = coords_.data() + i * kSubjectiveCount;
        double sum = 0.0;
        for (std::size_t a = 0; a < kSubjectiveCount; ++a) {
            const double diff = row[a] - u[a];
            sum += diff * diff;
        }
        d2[i] = sum;
    }
    // Entries are in id order, so index order breaks distance ties by id.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto closer = [&](std::size_t a, std::size_t b) { return d2[a] < d2[b] || (d2[a] == d2[b] && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);
    order.resize(k);
    if (distances) {
        distances->clear();
        for (auto i : order) distances->push_back(std::sqrt(d2[i]));
    }
    return order;
}

std::vector<Recommendation> RecommendationSpace::recommend(const SubjectiveVector& u, std::size_t k) const {
    std::vector<double> distances;
    const auto order = top_k(u, k, &distances);
    std::vector<Recommendation> out;
    out.reserve(k);
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& e = entries_[order[r]];
        out.push_back({r + 1, e.bean_id, distances[r], 1.0 / (1.0 + distances[r]), e.provenance, e.display});
    }
    return out;
}

std::vector<std::size_t> RecommendationSpace::nearest_ids(const SubjectiveVector& u, std::size_t k) const {
    auto order = top_k(u, k, nullptr);
    for (auto& i : order) i = entries_[i].bean_id;
    return order;
}

double rec_acc(std::span<const std::size_t> ground, std::span<const std::size_t> pred) {
    if (ground.size() != pred.size()) throw std::invalid_argument("rec_acc: lists differ in length");
    if (ground.empty()) throw std::invalid_argument("rec_acc: lists are empty");
    const std::unordered_set<std::size_t> g(ground.begin(), ground.end());
    const std::unordered_set<std::size_t> p(pred.begin(), pred.end());
    if (g.size() != ground.size() || p.size() != pred.size())
        throw std::invalid_argument("rec_acc: duplicate id within a list");
    std::size_t shared = 0;
    for (auto id : p) shared += g.count(id);
    return static_cast<double>(shared) / static_cast<double>(ground.size());
}

void export_space_tsv(std::ostream& out, const RecommendationSpace& space) {
    std::vector<std::string> header{"bean_id", "provenance"};
    for (auto name : kSubjectiveNames) header.emplace_back(name);
    for (auto name : {"species", "country_of_origin", "region", "variety", "processing_method"}) header.emplace_back(name);
    csv::write_row(out, header, '\t');
    for (const auto& e : space.entries()) {
        std::vector<std::string> row{std::to_string(e.bean_id), std::string(to_string(e.provenance))};
        for (double s : e.subjective) row.push_back(csv::format_double(s));
        row.insert(row.end(), {e.display.species, e.display.country_of_origin, e.display.region, e.display.variety,
                               e.display.processing_method});
        csv::write_row(out, row, '\t');
    }
}

}  // namespace coffee

#include "coffee/feature_selection.hpp"

#include "coffee/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace coffee {

namespace {

// Centred copy and its sum of squares.
double centre(Vector& v) {
    v.array() -= v.mean();
    return v.squaredNorm();
}

}  // namespace

UnivariateScores univariate_scores(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows()) throw std::invalid_argument("univariate_scores: X and Y row counts differ");
    const auto n = static_cast<double>(x.rows());
    UnivariateScores out;
    out.per_target = Matrix::Zero(x.cols(), y.cols());
    out.mean = Vector::Zero(x.cols());
    out.zero_variance.assign(static_cast<std::size_t>(x.cols()), false);
    if (x.rows() < 3) return out;

    std::vector<Vector> targets;
    std::vector<double> target_ss;
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
        Vector v = y.col(t);
        target_ss.push_back(centre(v));
        targets.push_back(std::move(v));
    }
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Vector xc = x.col(c);
        const double ss = centre(xc);
        if (ss <= 0.0) {
            out.zero_variance[static_cast<std::size_t>(c)] = true;
            continue;
        }
        for (Eigen::Index t = 0; t < y.cols(); ++t) {
            if (target_ss[static_cast<std::size_t>(t)] <= 0.0) continue;
            const double cov = xc.dot(targets[static_cast<std::size_t>(t)]);
            const double r2 = std::min(1.0, cov * cov / (ss * target_ss[static_cast<std::size_t>(t)]));
            out.per_target(c, t) =
                r2 >= 1.0 ? std::numeric_limits<double>::infinity() : r2 / (1.0 - r2) * (n - 2.0);
        }
        out.mean[c] = out.per_target.row(c).mean();
    }
    return out;
}

TreeImportance tree_importance(const Matrix& x, const Matrix& y, const ForestConfig& config) {
    TreeImportance out;
    const bool constant_y = (y.rowwise() - y.row(0)).cwiseAbs().maxCoeff() == 0.0;
    if (constant_y) {
        out.importance = Vector::Zero(x.cols());
        out.degenerate = true;
        return out;
    }
    const auto forest = RandomForest::fit(x, y, config);
    out.importance = forest.feature_importance();
    out.degenerate = forest.importance_degenerate();
    return out;
}

PearsonMatrix pearson_matrix(std::span<const CoffeeRecord> records) {
    PearsonMatrix out;
    out.attributes = {"species",   "country_of_origin", "region",           "variety",
                      "color",     "category_one_defects", "category_two_defects", "processing_method",
                      "moisture"};
    for (auto name : kSubjectiveNames) out.attributes.emplace_back(name);
    const auto d = static_cast<Eigen::Index>(out.attributes.size());
    const auto n = static_cast<Eigen::Index>(records.size());

    auto ordinal = [&](auto label_of) {
        std::map<std::string, double> codes;
        for (const auto& r : records) codes.emplace(label_of(r.properties), 0.0);
        double next = 0.0;
        for (auto& [label, code] : codes) code = next++;
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = codes.at(label_of(records[static_cast<std::size_t>(i)].properties));
        return v;
    };

    Matrix data(n, d);
    data.col(0) = ordinal([](const BeanProperties& p) { return std::string(to_string(p.species)); });
    data.col(1) = ordinal([](const BeanProperties& p) { return p.country_of_origin; });
    data.col(2) = ordinal([](const BeanProperties& p) { return p.region; });
    data.col(3) = ordinal([](const BeanProperties& p) { return p.variety; });
    data.col(4) = ordinal([](const BeanProperties& p) { return p.color; });
    data.col(7) = ordinal([](const BeanProperties& p) { return p.processing_method; });
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        data(i, 5) = r.properties.category_one_defects;
        data(i, 6) = r.properties.category_two_defects;
        data(i, 8) = r.properties.moisture;
        for (std::size_t s = 0; s < kSubjectiveCount; ++s) data(i, 9 + static_cast<Eigen::Index>(s)) = r.subjective[s];
    }

    out.zero_variance.assign(static_cast<std::size_t>(d), false);
    Matrix centred = data.rowwise() - data.colwise().mean();
    Vector norms(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        norms[c] = centred.col(c).norm();
        if (!(norms[c] > 0.0)) {
            out.zero_variance[static_cast<std::size_t>(c)] = true;
            centred.col(c).setZero();
        } else {
            centred.col(c) /= norms[c];
        }
    }
    out.values = centred.transpose() * centred;
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = a + 1; b < d; ++b) {
            const double v = std::clamp(0.5 * (out.values(a, b) + out.values(b, a)), -1.0, 1.0);
            out.values(a, b) = v;
            out.values(b, a) = v;
        }
        out.values(a, a) = 1.0;
    }
    return out;
}

void write_pearson_tsv(std::ostream& out, const PearsonMatrix& m) {
    std::vector<std::string> header{"attribute"};
    header.insert(header.end(), m.attributes.begin(), m.attributes.end());
    csv::write_row(out, header, '\t');
    for (std::size_t a = 0; a < m.attributes.size(); ++a) {
        std::vector<std::string> row{m.attributes[a]};
        for (std::size_t b = 0; b < m.attributes.size(); ++b)
            row.push_back(csv::format_double(m.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
        csv::write_row(out, row, '\t');
    }
}

EncodedMatrix selection_candidates(std::span<const RawReview> raw, std::span<const CoffeeRecord> records) {
    auto base = Encoder::fit(records).transform(records);
    std::map<std::size_t, const RawReview*> by_row;
    for (const auto& r : raw) by_row[r.row_index] = &r;

    static constexpr std::string_view kAltitude[] = {"altitude_low_meters", "altitude_high_meters",
                                                     "altitude_mean_meters"};
    static constexpr std::string_view kAltitudeKey[] = {"altitudelowmeters", "altitudehighmeters",
                                                        "altitudemeanmeters"};
    const auto n = static_cast<Eigen::Index>(records.size());
    Matrix extra(n, 3);
    for (Eigen::Index c = 0; c < 3; ++c) {
        std::vector<std::optional<double>> cells;
        double sum = 0.0;
        std::size_t present = 0;
        for (const auto& rec : records) {
            auto it = by_row.find(rec.source_row);
            std::optional<double> v;
            if (it != by_row.end()) v = it->second->get_number(kAltitudeKey[c]);
            if (v) {
                sum += *v;
                ++present;
            }
            cells.push_back(v);
        }
        const double mean = present ? sum / static_cast<double>(present) : 0.0;
        for (Eigen::Index i = 0; i < n; ++i) extra(i, c) = cells[static_cast<std::size_t>(i)].value_or(mean);
        Vector col = extra.col(c);
        const double ss = centre(col);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        extra.col(c) = sd > 0.0 ? Vector(col / sd) : col;
    }

    EncodedMatrix out;
    out.columns = base.columns;
    for (auto name : kAltitude) out.columns.push_back({std::string(name), EncodingKind::standardized, std::nullopt});
    out.values.resize(n, base.cols() + 3);
    out.values << base.values, extra;
    return out;
}

}  // namespace coffee

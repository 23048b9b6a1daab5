#include "coffee/dataset.hpp"

#include "coffee/csv.hpp"
#include "coffee/fingerprint.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace coffee {

namespace {

// Normalized names of the columns parsed as numbers.
const std::set<std::string, std::less<>>& numeric_columns() {
    static const std::set<std::string, std::less<>> columns = {
        "aroma",          "flavour",         "aftertaste",         "acidity",
        "body",           "balance",         "uniformity",         "cleancup",
        "sweetness",      "cupperpoints",    "totalcuppoints",     "moisture",
        "categoryonedefects", "categorytwodefects", "quakers",     "numberofbags",
        "altitudelowmeters",  "altitudehighmeters", "altitudemeanmeters"};
    return columns;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_missing_marker(std::string_view s) { return s.empty() || s == "NA" || s == "N/A"; }

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (is_missing_marker(s)) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

// Canonical subjective column keys in SubjectiveVector order.
constexpr std::array<std::string_view, kSubjectiveCount> kSubjectiveKeys = {
    "aroma", "flavour", "body", "sweetness", "acidity", "balance", "uniformity", "aftertaste"};

std::string label_or_unknown(const RawReview& review, std::string_view column, std::string_view rule,
                             CleaningLog& log) {
    if (auto v = review.get_text(column)) return *v;
    ++log.adjusted[std::string(rule)];
    return std::string(kUnknownLabel);
}

std::optional<int> parse_defects(const RawReview& review, std::string_view column) {
    auto value = review.get_number(column);
    if (!value || *value < 0.0 || *value != std::floor(*value) || *value > 1e9) return std::nullopt;
    return static_cast<int>(*value);
}

// Shared objective cleaning. Returns nullopt (and logs the rule) on drop.
std::optional<BeanProperties> clean_properties(const RawReview& review, CleaningLog& log) {
    auto drop = [&](const char* rule) -> std::optional<BeanProperties> {
        ++log.dropped[rule];
        return std::nullopt;
    };

    auto species_text = review.get_text("species");
    if (!species_text) return drop("missing_species");
    auto species = parse_species(*species_text);
    if (!species) return drop("unknown_species");

    auto country = review.get_text("countryoforigin");
    if (!country) return drop("missing_country");

    auto moisture = review.get_number("moisture");
    if (!moisture) return drop("missing_moisture");

    auto cat1 = parse_defects(review, "categoryonedefects");
    auto cat2 = parse_defects(review, "categorytwodefects");
    if (!cat1 || !cat2) return drop("invalid_defects");

    BeanProperties p;
    p.species = *species;
    p.country_of_origin = *country;
    p.region = label_or_unknown(review, "region", "filled_region", log);
    p.variety = label_or_unknown(review, "variety", "filled_variety", log);
    p.color = label_or_unknown(review, "color", "filled_color", log);
    p.processing_method = label_or_unknown(review, "processingmethod", "filled_processing_method", log);
    p.category_one_defects = *cat1;
    p.category_two_defects = *cat2;

    double m = *moisture;
    if (m > 1.0) {
        m /= 100.0;
        ++log.adjusted["moisture_percent_rescaled"];
    }
    if (m < 0.0 || m > 1.0) {
        m = std::clamp(m, 0.0, 1.0);
        ++log.adjusted["moisture_clamped"];
    }
    p.moisture = m;
    return p;
}

}  // namespace

std::string normalize_column_name(std::string_view name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (out == "flavor") return "flavour";
    if (out == "colour") return "color";
    return out;
}

std::optional<std::string> RawReview::get_text(std::string_view column) const {
    auto it = text.find(column);
    if (it == text.end()) return std::nullopt;
    return it->second;
}

std::optional<double> RawReview::get_number(std::string_view column) const {
    auto it = numbers.find(column);
    if (it == numbers.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> required_objective_columns() {
    return {"Species",  "Country.of.Origin",    "Region",
            "Variety",  "Color",                "Category.One.Defects",
            "Category.Two.Defects", "Processing.Method", "Moisture"};
}

std::vector<std::string> required_review_columns() {
    auto columns = required_objective_columns();
    for (auto name : {"Aroma", "Flavor", "Body", "Sweetness", "Acidity", "Balance", "Uniformity",
                      "Aftertaste"})
        columns.emplace_back(name);
    return columns;
}

std::vector<RawReview> parse_reviews(std::istream& in, std::span<const std::string> required_columns) {
    auto rows = csv::read(in);
    if (rows.empty()) throw std::runtime_error("dataset has no header row");

    std::vector<std::string> keys;
    keys.reserve(rows.front().size());
    for (const auto& name : rows.front()) keys.push_back(normalize_column_name(name));

    for (const auto& column : required_columns) {
        const auto key = normalize_column_name(column);
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw std::runtime_error("dataset header is missing required column '" + column + "'");
    }

    const auto& numeric = numeric_columns();
    std::vector<RawReview> reviews;
    reviews.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        RawReview review;
        review.row_index = r - 1;
        const auto& row = rows[r];
        for (std::size_t c = 0; c < keys.size() && c < row.size(); ++c) {
            const auto& key = keys[c];
            if (key.empty()) continue;
            if (numeric.contains(key)) {
                if (auto v = parse_number(row[c])) review.numbers.emplace(key, *v);
            } else {
                auto value = trim(row[c]);
                if (!is_missing_marker(value)) review.text.emplace(key, std::string(value));
            }
        }
        reviews.push_back(std::move(review));
    }
    return reviews;
}

std::vector<RawReview> load_csv(const std::filesystem::path& path,
                                std::span<const std::string> required_columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
    return parse_reviews(in, required_columns);
}

std::vector<RawReview> load_csv(const std::filesystem::path& path) {
    const auto required = required_review_columns();
    return load_csv(path, required);
}

std::string_view to_string(Species species) {
    return species == Species::arabica ? "arabica" : "robusta";
}

std::optional<Species> parse_species(std::string_view text) {
    std::string lower;
    for (char c : trim(text)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "arabica") return Species::arabica;
    if (lower == "robusta") return Species::robusta;
    return std::nullopt;
}

std::string CleaningLog::to_text() const {
    std::ostringstream out;
    out << "rows_in " << rows_in << '\n';
    out << "rows_kept " << rows_kept << '\n';
    out << "rows_dropped " << rows_dropped() << '\n';
    for (const auto& [rule, count] : dropped) out << "dropped " << rule << ' ' << count << '\n';
    for (const auto& [rule, count] : adjusted) out << "adjusted " << rule << ' ' << count << '\n';
    return out.str();
}

std::vector<CoffeeRecord> clean(std::span<const RawReview> reviews, CleaningLog* log) {
    CleaningLog local;
    CleaningLog& l = log ? *log : local;
    l = CleaningLog{};
    l.rows_in = reviews.size();

    std::vector<CoffeeRecord> records;
    records.reserve(reviews.size());
    for (const auto& review : reviews) {
        // Subjective checks first: an unscored review is useless for training.
        SubjectiveVector scores{};
        bool missing = false;
        bool out_of_range = false;
        for (std::size_t a = 0; a < kSubjectiveCount; ++a) {
            auto v = review.get_number(kSubjectiveKeys[a]);
            if (!v) {
                missing = true;
                break;
            }
            if (!valid_score(*v)) out_of_range = true;
            scores[a] = *v;
        }
        if (missing) {
            ++l.dropped["missing_subjective"];
            continue;
        }
        if (out_of_range) {
            ++l.dropped["subjective_out_of_range"];
            continue;
        }

        auto properties = clean_properties(review, l);
        if (!properties) continue;

        CoffeeRecord record;
        record.id = records.size();
        record.source_row = review.row_index;
        record.properties = std::move(*properties);
        record.subjective = scores;
        records.push_back(std::move(record));
    }
    l.rows_kept = records.size();
    return records;
}

std::vector<CoffeeRecord> clean_unreviewed(std::span<const RawReview> reviews, std::size_t first_id,
                                           CleaningLog* log) {
    CleaningLog local;
    CleaningLog& l = log ? *log : local;
    l = CleaningLog{};
    l.rows_in = reviews.size();

    std::vector<CoffeeRecord> records;
    for (const auto& review : reviews) {
        auto properties = clean_properties(review, l);
        if (!properties) continue;
        CoffeeRecord record;
        record.id = first_id + records.size();
        record.source_row = review.row_index;
        record.properties = std::move(*properties);
        record.subjective.fill(kScoreFloor);
        records.push_back(std::move(record));
    }
    l.rows_kept = records.size();
    return records;
}

std::vector<std::string> cleaned_header() {
    std::vector<std::string> header = {"id",
                                       "species",
                                       "country_of_origin",
                                       "region",
                                       "variety",
                                       "color",
                                       "category_one_defects",
                                       "category_two_defects",
                                       "processing_method",
                                       "moisture"};
    for (auto name : kSubjectiveNames) header.emplace_back(name);
    return header;
}

void write_cleaned_csv(std::ostream& out, std::span<const CoffeeRecord> records) {
    const auto header = cleaned_header();
    csv::write_row(out, header);
    std::vector<std::string> row;
    for (const auto& r : records) {
        const auto& p = r.properties;
        row = {std::to_string(r.id),
               std::string(to_string(p.species)),
               p.country_of_origin,
               p.region,
               p.variety,
               p.color,
               std::to_string(p.category_one_defects),
               std::to_string(p.category_two_defects),
               p.processing_method,
               csv::format_double(p.moisture)};
        for (double s : r.subjective) row.push_back(csv::format_double(s));
        csv::write_row(out, row);
    }
}

void write_cleaned_csv(const std::filesystem::path& path, std::span<const CoffeeRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_cleaned_csv(out, records);
}

Matrix subjective_matrix(std::span<const CoffeeRecord> records) {
    Matrix y(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kSubjectiveCount));
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t a = 0; a < kSubjectiveCount; ++a)
            y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = records[i].subjective[a];
    return y;
}

std::vector<BeanProperties> properties_of(std::span<const CoffeeRecord> records) {
    std::vector<BeanProperties> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.properties);
    return out;
}

std::string records_fingerprint(std::span<const CoffeeRecord> records) {
    Fingerprint fp;
    fp.update(static_cast<std::uint64_t>(records.size()));
    for (const auto& r : records) {
        const auto& p = r.properties;
        fp.update(static_cast<std::uint64_t>(r.id))
            .update(to_string(p.species))
            .update(p.country_of_origin)
            .update(p.region)
            .update(p.variety)
            .update(p.color)
            .update(static_cast<std::uint64_t>(p.category_one_defects))
            .update(static_cast<std::uint64_t>(p.category_two_defects))
            .update(p.processing_method)
            .update(p.moisture);
        for (double s : r.subjective) fp.update(s);
    }
    return fp.hex();
}

}  // namespace coffee

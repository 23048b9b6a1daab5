#pragma once

#include "coffee/types.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coffee {

/// One data row of the source CSV. Cells are keyed by normalized column name
/// (lower-case alphanumerics, so "Country.of.Origin", "Country of Origin" and
/// "country_of_origin" all map to "countryoforigin"). Empty cells are absent;
/// numeric columns that fail to parse are absent as well, never zero.
struct RawReview {
    std::size_t row_index = 0;
    std::map<std::string, std::string, std::less<>> text;
    std::map<std::string, double, std::less<>> numbers;

    std::optional<std::string> get_text(std::string_view column) const;
    std::optional<double> get_number(std::string_view column) const;
};

std::string normalize_column_name(std::string_view name);

// Columns load_csv requires by default: the nine objective properties plus
// the eight subjective scores.
std::vector<std::string> required_review_columns();
std::vector<std::string> required_objective_columns();

std::vector<RawReview> load_csv(const std::filesystem::path& path);
std::vector<RawReview> load_csv(const std::filesystem::path& path,
                                std::span<const std::string> required_columns);
std::vector<RawReview> parse_reviews(std::istream& in, std::span<const std::string> required_columns);

enum class Species { arabica, robusta };

std::string_view to_string(Species species);
std::optional<Species> parse_species(std::string_view text);

/// Objective bean properties: the regression inputs.
struct BeanProperties {
    Species species = Species::arabica;
    std::string country_of_origin;
    std::string region;
    std::string variety;
    std::string color;
    int category_one_defects = 0;
    int category_two_defects = 0;
    std::string processing_method;
    double moisture = 0.0;  // fraction in [0, 1]

    bool operator==(const BeanProperties&) const = default;
};

struct CoffeeRecord {
    std::size_t id = 0;          // dense post-cleaning ordinal
    std::size_t source_row = 0;  // RawReview::row_index it came from
    BeanProperties properties;
    SubjectiveVector subjective{};

    bool operator==(const CoffeeRecord&) const = default;
};

inline constexpr std::string_view kUnknownLabel = "unknown";

struct CleaningLog {
    std::size_t rows_in = 0;
    std::size_t rows_kept = 0;
    std::map<std::string, std::size_t> dropped;   // rule -> rows removed (first failing rule)
    std::map<std::string, std::size_t> adjusted;  // rule -> cells filled or rescaled

    std::size_t rows_dropped() const { return rows_in - rows_kept; }
    std::string to_text() const;
};

/// Applies the cleaning rules and assigns ids 0..n-1 in source order.
///  - drop: absent/unrecognized species, absent country, absent moisture,
///    any absent subjective score, any score outside (0, 10], absent or
///    negative or fractional defect counts;
///  - fill: absent region/variety/color/processing method with "unknown";
///  - moisture above 1 is read as a percentage, then clamped to [0, 1].
std::vector<CoffeeRecord> clean(std::span<const RawReview> reviews, CleaningLog* log = nullptr);

/// Objective-only variant for catalogues of unreviewed beans. Subjective
/// cells are ignored; ids start at first_id.
std::vector<CoffeeRecord> clean_unreviewed(std::span<const RawReview> reviews, std::size_t first_id,
                                           CleaningLog* log = nullptr);

// Cleaned dataset file: id, 9 objective, 8 subjective columns.
std::vector<std::string> cleaned_header();
void write_cleaned_csv(std::ostream& out, std::span<const CoffeeRecord> records);
void write_cleaned_csv(const std::filesystem::path& path, std::span<const CoffeeRecord> records);

Matrix subjective_matrix(std::span<const CoffeeRecord> records);
std::vector<BeanProperties> properties_of(std::span<const CoffeeRecord> records);

// Content hash over ids, properties and scores.
std::string records_fingerprint(std::span<const CoffeeRecord> records);

}  // namespace coffee

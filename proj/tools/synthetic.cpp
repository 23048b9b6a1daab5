#include "synthetic.hpp"

#include "coffee/csv.hpp"
#include "coffee/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace coffee::synthetic {

namespace {

struct Country {
    const char* name;
    double weight;
    double effect;
    std::array<const char*, 3> regions;
};

constexpr std::array<Country, 12> kCountries{{
    {"Mexico", 236, -0.25, {"chiapas", "veracruz", "oaxaca"}},
    {"Colombia", 183, 0.10, {"huila", "antioquia", "narino"}},
    {"Guatemala", 181, 0.05, {"huehuetenango", "antigua", "acatenango"}},
    {"Brazil", 132, 0.00, {"sul de minas", "cerrado", "mogiana"}},
    {"Taiwan", 75, -0.05, {"alishan", "chiayi", "yunlin"}},
    {"United States (Hawaii)", 73, 0.00, {"kona", "kau", "maui"}},
    {"Honduras", 53, -0.20, {"marcala", "copan", "santa barbara"}},
    {"Costa Rica", 51, 0.15, {"tarrazu", "west valley", "central valley"}},
    {"Ethiopia", 44, 0.55, {"yirgacheffe", "sidamo", "guji"}},
    {"Tanzania, United Republic Of", 40, 0.05, {"kilimanjaro", "arusha", "mbeya"}},
    {"Uganda", 36, 0.10, {"bugisu", "mount elgon", "rwenzori"}},
    {"Kenya", 25, 0.45, {"nyeri", "kirinyaga", "kiambu"}},
}};

constexpr std::array<std::pair<const char*, double>, 6> kVarieties{{
    {"Caturra", 0.00}, {"Bourbon", 0.05}, {"Typica", 0.00}, {"Catuai", -0.05}, {"Gesha", 0.35}, {"SL28", 0.20}}};

constexpr std::array<std::pair<const char*, double>, 5> kProcesses{{{"Washed / Wet", 0.05},
                                                                    {"Natural / Dry", 0.00},
                                                                    {"Semi-washed / Semi-pulped", -0.05},
                                                                    {"Pulped natural / honey", 0.05},
                                                                    {"Other", -0.10}}};

constexpr std::array<const char*, 3> kColors{"Green", "Bluish-Green", "Blue-Green"};

// Attribute loadings on the latent quality and residual spread, in the
// order of the source file's score columns.
struct Attribute {
    const char* column;
    double base;
    double loading;
    double noise;
};
constexpr std::array<Attribute, 6> kGraded{{{"Aroma", 7.57, 0.9, 0.18},
                                            {"Flavor", 7.52, 1.1, 0.15},
                                            {"Aftertaste", 7.40, 1.1, 0.16},
                                            {"Acidity", 7.54, 0.9, 0.18},
                                            {"Body", 7.52, 0.7, 0.18},
                                            {"Balance", 7.52, 1.0, 0.18}}};

template <class Options>
std::size_t weighted_pick(Rng& rng, const Options& options, auto weight_of) {
    double total = 0.0;
    for (const auto& o : options) total += weight_of(o);
    double r = rng.uniform01() * total;
    for (std::size_t i = 0; i < options.size(); ++i) {
        r -= weight_of(options[i]);
        if (r < 0.0) return i;
    }
    return options.size() - 1;
}

std::string fixed2(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
}

std::size_t poisson(Rng& rng, double mean) {
    const double limit = std::exp(-mean);
    double p = rng.uniform01();
    std::size_t k = 0;
    while (p > limit) {
        p *= rng.uniform01();
        ++k;
    }
    return k;
}

}  // namespace

std::vector<std::string> cqi_header() {
    return {"",
            "Species",
            "Owner",
            "Country.of.Origin",
            "Farm.Name",
            "Lot.Number",
            "Mill",
            "ICO.Number",
            "Company",
            "Altitude",
            "Region",
            "Producer",
            "Number.of.Bags",
            "Bag.Weight",
            "In.Country.Partner",
            "Harvest.Year",
            "Grading.Date",
            "Owner.1",
            "Variety",
            "Processing.Method",
            "Aroma",
            "Flavor",
            "Aftertaste",
            "Acidity",
            "Body",
            "Balance",
            "Uniformity",
            "Clean.Cup",
            "Sweetness",
            "Cupper.Points",
            "Total.Cup.Points",
            "Moisture",
            "Category.One.Defects",
            "Quakers",
            "Color",
            "Category.Two.Defects",
            "Expiration",
            "Certification.Body",
            "Certification.Address",
            "Certification.Contact",
            "unit_of_measurement",
            "altitude_low_meters",
            "altitude_high_meters",
            "altitude_mean_meters"};
}

void write_cqi_csv(std::ostream& out, const Options& options) {
    const auto header = cqi_header();
    csv::write_row(out, header);
    Rng rng(derive_seed(options.seed, {0x73796e7468ULL}));
    const std::size_t robusta_from = options.rows - std::min(options.robusta, options.rows);

    for (std::size_t i = 0; i < options.rows; ++i) {
        const bool robusta = i >= robusta_from;
        const auto& country = kCountries[weighted_pick(rng, kCountries, [](const Country& c) { return c.weight; })];
        const auto variety = rng.uniform_index(kVarieties.size());
        const auto process = rng.uniform_index(kProcesses.size());
        const auto region = rng.uniform_index(3);
        const bool variety_missing = rng.uniform01() < 0.15;
        const bool process_missing = rng.uniform01() < 0.10;
        const bool region_missing = rng.uniform01() < 0.05;
        const bool color_missing = rng.uniform01() < 0.15;
        const auto cat1 = poisson(rng, 0.5);
        const auto cat2 = poisson(rng, 3.5);
        const auto color = rng.uniform_index(kColors.size());
        double moisture = rng.uniform01() < 0.2 ? 0.0 : 0.09 + 0.04 * rng.uniform01();

        double quality = country.effect + (process_missing ? 0.0 : kProcesses[process].second) +
                         (variety_missing ? 0.0 : kVarieties[variety].second) - 0.04 * static_cast<double>(cat1) -
                         0.02 * static_cast<double>(cat2) + 0.8 * (moisture - 0.1) + (robusta ? -0.15 : 0.0);
        quality *= 0.6;
        const double shared = 0.22 * rng.normal();  // reviewer/lot effect nobody can observe

        std::vector<std::string> row(header.size());
        row[0] = std::to_string(i + 1);
        row[1] = robusta ? "Robusta" : "Arabica";
        row[2] = "owner " + std::to_string(rng.uniform_index(400));
        row[3] = country.name;
        row[4] = rng.uniform01() < 0.3 ? "NA" : "farm " + std::to_string(rng.uniform_index(600));
        row[5] = rng.uniform01() < 0.8 ? "NA" : std::to_string(rng.uniform_index(100000));
        row[6] = rng.uniform01() < 0.25 ? "NA" : "mill " + std::to_string(rng.uniform_index(300));
        row[7] = rng.uniform01() < 0.6 ? "NA" : "3-" + std::to_string(rng.uniform_index(2000)) + "-" +
                                                     std::to_string(rng.uniform_index(200));
        row[8] = rng.uniform01() < 0.2 ? "NA" : "company " + std::to_string(rng.uniform_index(250));
        const double alt_low = 300.0 + std::floor(rng.uniform01() * 1700.0);
        const double alt_high = alt_low + std::floor(rng.uniform01() * 3.0) * 100.0;
        const bool alt_missing = rng.uniform01() < 0.17;
        row[9] = alt_missing ? "NA" : std::to_string(static_cast<int>(alt_low)) + "-" + std::to_string(static_cast<int>(alt_high));
        row[10] = region_missing ? "NA" : country.regions[region];
        row[11] = rng.uniform01() < 0.2 ? "NA" : "producer " + std::to_string(rng.uniform_index(700));
        row[12] = std::to_string(1 + rng.uniform_index(320));
        row[13] = rng.uniform01() < 0.5 ? "60 kg" : "69 kg";
        row[14] = "partner " + std::to_string(rng.uniform_index(27));
        row[15] = std::to_string(2010 + rng.uniform_index(9));
        row[16] = "April " + std::to_string(1 + rng.uniform_index(28)) + "th, 2015";
        row[17] = row[2];
        row[18] = variety_missing ? "NA" : kVarieties[variety].first;
        row[19] = process_missing ? "NA" : kProcesses[process].first;

        std::array<double, 6> graded{};
        for (std::size_t a = 0; a < kGraded.size(); ++a) {
            const double v = kGraded[a].base + kGraded[a].loading * (quality + shared) + kGraded[a].noise * rng.normal();
            graded[a] = std::round(std::clamp(v, 5.5, 9.5) * 100.0) / 100.0;
        }
        auto step_score = [&](double p_perfect) {
            if (rng.uniform01() < p_perfect + 0.3 * quality) return 10.0;
            return 10.0 - 1.33 * static_cast<double>(1 + rng.uniform_index(2));
        };
        const double uniformity = step_score(0.9);
        const double clean_cup = step_score(0.9);
        const double sweetness = step_score(0.92);
        const double cupper = std::round(std::clamp(7.5 + 1.0 * (quality + shared) + 0.2 * rng.normal(), 5.0, 9.5) * 100.0) / 100.0;
        for (std::size_t a = 0; a < graded.size(); ++a) row[20 + a] = fixed2(graded[a]);
        row[26] = fixed2(uniformity);
        row[27] = fixed2(clean_cup);
        row[28] = fixed2(sweetness);
        row[29] = fixed2(cupper);
        double total = uniformity + clean_cup + sweetness + cupper;
        for (double g : graded) total += g;
        row[30] = fixed2(total);

        // Some graders entered moisture as a percentage.
        if (moisture > 0.0 && rng.uniform01() < 0.01) moisture *= 100.0;
        row[31] = fixed2(moisture);
        row[32] = std::to_string(cat1);
        row[33] = rng.uniform01() < 0.85 ? "0" : std::to_string(1 + rng.uniform_index(5));
        row[34] = color_missing ? "NA" : kColors[color];
        row[35] = std::to_string(cat2);
        row[36] = "May " + std::to_string(1 + rng.uniform_index(28)) + "th, 2016";
        row[37] = row[14];
        row[38] = "address " + std::to_string(rng.uniform_index(27));
        row[39] = "contact " + std::to_string(rng.uniform_index(27));
        row[40] = "m";
        if (!alt_missing) {
            row[41] = fixed2(alt_low);
            row[42] = fixed2(alt_high);
            row[43] = fixed2(0.5 * (alt_low + alt_high));
        } else {
            row[41] = row[42] = row[43] = "NA";
        }

        if (options.include_invalid && options.rows >= 40) {
            if (i == 7) row[3] = "NA";  // no origin
            if (i == options.rows / 3) row[28] = "";  // sweetness not recorded
            if (i == robusta_from - 1)  // an all-zero score sheet
                for (std::size_t c = 20; c <= 30; ++c) row[c] = "0.00";
        }
        csv::write_row(out, row);
    }
}

std::string cqi_csv(const Options& options) {
    std::ostringstream out;
    write_cqi_csv(out, options);
    return out.str();
}

std::vector<CoffeeRecord> records(const Options& options) {
    std::istringstream in(cqi_csv(options));
    const auto required = required_review_columns();
    const auto raw = parse_reviews(in, required);
    return clean(raw);
}

}  // namespace coffee::synthetic

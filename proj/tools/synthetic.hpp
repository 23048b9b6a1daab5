#pragma once

#include "coffee/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// Generator for files shaped like the CQI merged review table: same 44
// columns, similar value ranges and missingness, and a handful of rows the
// cleaning rules must drop. Scores follow a latent quality driven by origin,
// process, variety and defects plus shared and per-attribute noise, so the
// regressors have real signal to find. Altitude columns are pure noise.
namespace coffee::synthetic {

struct Options {
    std::size_t rows = 1340;
    std::size_t robusta = 28;  // trailing rows, as in the merged file
    std::uint64_t seed = 0;
    bool include_invalid = true;  // a few rows violating the cleaning rules
};

std::vector<std::string> cqi_header();
void write_cqi_csv(std::ostream& out, const Options& options);
std::string cqi_csv(const Options& options);

// Parsed and cleaned records of cqi_csv(options).
std::vector<CoffeeRecord> records(const Options& options);

}  // namespace coffee::synthetic

// Writes a synthetic review table with the CQI merged-file layout, for
// exercising the pipeline when the real file is not at hand.

#include "synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic CQI-shaped coffee review CSV"};
    coffee::synthetic::Options options;
    std::string output;
    bool valid_only = false;
    app.add_option("-o,--output", output, "Output file (default: stdout)");
    app.add_option("--rows", options.rows, "Data rows")->capture_default_str();
    app.add_option("--robusta", options.robusta, "Trailing robusta rows")->capture_default_str();
    app.add_option("--seed", options.seed, "Random seed")->capture_default_str();
    app.add_flag("--valid-only", valid_only, "Omit the rows the cleaning rules drop");
    CLI11_PARSE(app, argc, argv);
    options.include_invalid = !valid_only;

    if (output.empty()) {
        coffee::synthetic::write_cqi_csv(std::cout, options);
        return 0;
    }
    std::ofstream out(output, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write " << output << "\n";
        return 1;
    }
    coffee::synthetic::write_cqi_csv(out, options);
    return out ? 0 : 1;
}

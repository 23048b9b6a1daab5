// One PASS / FAIL / NOT RUN line per acceptance criterion.
//   acceptance                      everything; CQI checks need --data
//   acceptance --suite core         checks that run on generated data
//   acceptance --suite cqi --data F reproduction checks on the review file
// Exit: 0 all selected passed, 1 any failure, 77 nothing could run.

#include "coffee/dataset.hpp"
#include "coffee/encoder.hpp"
#include "coffee/evaluation.hpp"
#include "coffee/kde.hpp"
#include "coffee/mlp.hpp"
#include "coffee/recommender.hpp"
#include "coffee/regressor.hpp"
#include "coffee/rng.hpp"
#include "coffee/svr.hpp"
#include "coffee/sweep.hpp"
#include "synthetic.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace coffee;

namespace {

enum class Outcome { pass, fail, not_run };

struct Result {
    Outcome outcome;
    std::string detail;
};

Result pass_if(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int run(const std::string& args) {
    const std::string cmd = std::string(COFFEE_CLI) + " " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---- reproduction on the review file ----

Result cv_check(std::span<const CoffeeRecord> records, ModelFamily family, double target, double limit_s) {
    const auto start = std::chrono::steady_clock::now();
    const auto report = cross_validate(records, family, ModelConfig{}, 10, 0);
    const double took = seconds_since(start);
    const bool ok = std::abs(report.average - target) <= 0.05 && took < limit_s;
    return pass_if(ok, std::string(to_string(family)) + " RMSE " + fmt(report.average) + " (target " + fmt(target) +
                           " +/- 0.05), " + fmt(took, 1) + " s (limit " + fmt(limit_s, 0) + " s)");
}

Result rf_reproduction(std::span<const CoffeeRecord> records) { return cv_check(records, ModelFamily::forest, 0.3562, 120); }

Result mlp_svr_reproduction(std::span<const CoffeeRecord> records) {
    const auto mlp = cv_check(records, ModelFamily::mlp, 0.3580, 1200);
    const auto svr = cv_check(records, ModelFamily::svr, 0.3750, 600);
    const bool ok = mlp.outcome == Outcome::pass && svr.outcome == Outcome::pass;
    return pass_if(ok, mlp.detail + "; " + svr.detail);
}

Result sweep_reproduction(std::span<const CoffeeRecord> records) {
    const auto start = std::chrono::steady_clock::now();
    const auto report = accuracy_sweep(records, SweepConfig{});
    const double took = seconds_since(start);
    const std::array<double, 4> target{0.927, 0.8606, 0.7787, 0.6955};
    bool ok = took < 600 && report.rows.size() == 4;
    std::string detail;
    for (std::size_t i = 0; i < report.rows.size() && i < 4; ++i) {
        ok = ok && std::abs(report.rows[i].mean - target[i]) <= 0.07;
        if (i) ok = ok && report.rows[i].mean <= report.rows[i - 1].mean;
        detail += "m=" + fmt(report.rows[i].m, 2) + " " + fmt(report.rows[i].mean) + " (target " + fmt(target[i]) + ") ";
    }
    return pass_if(ok, detail + fmt(took, 1) + " s");
}

// ---- checks on generated data ----

Result oracle_exactness() {
    const auto records = synthetic::records({});
    std::vector<SpaceEntry> entries;
    for (const auto& r : records) entries.push_back({r.id, r.subjective, Provenance::reviewed, {}});
    const auto space = RecommendationSpace::build(entries);
    Rng rng(2024);
    std::size_t mismatches = 0;
    for (int q = 0; q < 1000; ++q) {
        SubjectiveVector u;
        for (auto& v : u) v = rng.uniform(0.0, 10.0);
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform01() * 20);
        std::vector<std::pair<double, std::size_t>> scan;
        for (const auto& e : entries) {
            double s = 0.0;
            for (std::size_t a = 0; a < kSubjectiveCount; ++a) s += (u[a] - e.subjective[a]) * (u[a] - e.subjective[a]);
            scan.emplace_back(std::sqrt(s), e.bean_id);
        }
        std::sort(scan.begin(), scan.end());
        const auto got = space.nearest_ids(u, k);
        for (std::size_t i = 0; i < k; ++i)
            if (got[i] != scan[i].second) {
                ++mismatches;
                break;
            }
    }
    return pass_if(mismatches == 0, std::to_string(mismatches) + " mismatches in 1000 queries over " +
                                        std::to_string(space.size()) + " beans");
}

double gradient_error(Mlp& net, const Matrix& x, const Matrix& y, std::size_t samples_per_tensor, Rng& rng) {
    Mlp::Gradients grads;
    net.loss_and_gradients(x, y, grads);
    Mlp::Gradients scratch;
    const double h = 1e-5;
    double worst = 0.0;
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = net.loss_and_gradients(x, y, scratch);
        param = saved - h;
        const double down = net.loss_and_gradients(x, y, scratch);
        param = saved;
        const double numeric = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        auto& layer = net.layers()[l];
        const auto nw = static_cast<std::size_t>(layer.weights.size());
        const auto nb = static_cast<std::size_t>(layer.bias.size());
        for (std::size_t s = 0; s < std::min(samples_per_tensor, nw); ++s) {
            const std::size_t i = samples_per_tensor >= nw ? s : static_cast<std::size_t>(rng.uniform01() * static_cast<double>(nw));
            probe(layer.weights.data()[i], grads.weights[l].data()[i]);
        }
        for (std::size_t s = 0; s < std::min(samples_per_tensor, nb); ++s) {
            const std::size_t i = samples_per_tensor >= nb ? s : static_cast<std::size_t>(rng.uniform01() * static_cast<double>(nb));
            probe(layer.bias[static_cast<Eigen::Index>(i)], grads.bias[l][static_cast<Eigen::Index>(i)]);
        }
    }
    return worst;
}

Result gradient_check() {
    const auto records = coffee::synthetic::records({.rows = 200, .robusta = 5, .seed = 1, .include_invalid = false});
    const auto encoded = encode(records);
    const Matrix x = encoded.values.topRows(5);
    const Matrix y = subjective_matrix(records).topRows(5);
    Rng rng(77);
    // Every parameter of a narrow network, then a sample from each tensor of
    // the full-size one.
    MlpConfig small;
    small.hidden_layers = {12, 10, 8};
    auto narrow = Mlp::initialise(x.cols(), y, small);
    narrow.layers().back().bias.array() -= 0.5;
    const double e_small = gradient_error(narrow, x, y, std::numeric_limits<std::size_t>::max(), rng);
    auto full = Mlp::initialise(x.cols(), y, MlpConfig{});
    full.layers().back().bias.array() -= 0.5;
    const double e_full = gradient_error(full, x, y, 300, rng);
    return pass_if(std::max(e_small, e_full) < 1e-4,
                   "max relative error " + fmt(e_small * 1e6, 3) + "e-6 (all params, 12-10-8), " +
                       fmt(e_full * 1e6, 3) + "e-6 (sampled, 256-256-256)");
}

Result degenerate_protocol() {
    const auto records = synthetic::records({.rows = 400, .robusta = 10, .seed = 5, .include_invalid = false});
    SweepConfig cfg;
    cfg.m_values = {0.0, 0.10, 0.20, 0.33, 0.50, 0.9};
    const auto report = accuracy_sweep(records, cfg, oracle_predictor());
    bool ok = true;
    std::string detail;
    for (const auto& row : report.rows) {
        ok = ok && row.mean == 1.0 && row.std == 0.0;
        detail += fmt(row.mean, 6) + " ";
    }
    return pass_if(ok, "oracle accuracy per m: " + detail);
}

Result determinism(const fs::path& work) {
    const fs::path data = work / "reviews.csv";
    std::ofstream(data) << synthetic::cqi_csv({.rows = 300, .robusta = 8, .seed = 9});
    auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    std::string detail;
    bool ok = true;
    for (std::string family : {"rf", "svr", "mlp"}) {
        const auto a = work / ("a-" + family + ".json"), b = work / ("b-" + family + ".json");
        const int ra = run("--seed 11 train " + family + " --data " + q(data) + " --model " + q(a));
        const int rb = run("--seed 11 train " + family + " --data " + q(data) + " --model " + q(b));
        const bool same = ra == 0 && rb == 0 && slurp(a) == slurp(b) && !slurp(a).empty();
        ok = ok && same;
        detail += family + (same ? " model identical; " : " model differs; ");
    }
    for (std::string tag : {"a", "b"}) {
        if (run("--seed 11 --out " + q(work / ("sim-" + tag)) + " simulate --data " + q(data)) != 0) ok = false;
    }
    const bool same_report = slurp(work / "sim-a" / "accuracy_report.json") == slurp(work / "sim-b" / "accuracy_report.json") &&
                             slurp(work / "sim-a" / "accuracy_table.tsv") == slurp(work / "sim-b" / "accuracy_table.tsv") &&
                             !slurp(work / "sim-a" / "accuracy_report.json").empty();
    ok = ok && same_report;
    detail += same_report ? "simulate report identical" : "simulate report differs";
    return pass_if(ok, detail);
}

Result property_suites() {
    std::vector<std::string> failed;
    Rng rng(31);

    // rec_acc: bounded, symmetric, multiples of 1/k.
    for (int t = 0; t < 500; ++t) {
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform01() * 10);
        std::vector<std::size_t> pool(30);
        std::iota(pool.begin(), pool.end(), 0);
        rng.shuffle(pool.begin(), pool.end());
        std::vector<std::size_t> a(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        rng.shuffle(pool.begin(), pool.end());
        std::vector<std::size_t> b(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        const double ab = rec_acc(a, b), ba = rec_acc(b, a);
        if (ab < 0 || ab > 1 || ab != ba || std::abs(ab * k - std::round(ab * k)) > 1e-12 || rec_acc(a, a) != 1.0) {
            failed.push_back("rec_acc");
            break;
        }
    }

    // Clamping into (0, 10] for every family, on extreme inputs.
    const auto records = synthetic::records({.rows = 150, .robusta = 4, .seed = 6, .include_invalid = false});
    ModelConfig cfg;
    cfg.svr.per_target.assign(kSubjectiveCount, {10.0, 0.1});
    cfg.mlp.hidden_layers = {32, 32};
    cfg.mlp.epochs = 10;
    for (auto family : {ModelFamily::forest, ModelFamily::svr, ModelFamily::mlp}) {
        const auto model = train_regressor(records, family, cfg);
        auto x = model.encoder().transform(records);
        for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values.data()[i] *= 1e4 * rng.normal();
        const Matrix p = model.predict(x);
        if (!(p.minCoeff() > 0.0 && p.maxCoeff() <= 10.0)) failed.push_back(std::string("clamp ") + std::string(to_string(family)));
    }

    // One-hot blocks sum to one per row.
    const auto encoded = encode(records);
    std::map<std::string, std::vector<Eigen::Index>> blocks;
    for (std::size_t c = 0; c < encoded.columns.size(); ++c)
        if (encoded.columns[c].kind == EncodingKind::one_hot)
            blocks[encoded.columns[c].source_feature].push_back(static_cast<Eigen::Index>(c));
    for (Eigen::Index r = 0; r < encoded.rows(); ++r)
        for (const auto& [name, cols] : blocks) {
            double s = 0.0;
            for (auto c : cols) s += encoded.values(r, c);
            if (s != 1.0) {
                failed.push_back("one-hot " + name);
                r = encoded.rows() - 1;
                break;
            }
        }

    // KDE 1-D integration.
    Matrix one(40, 1);
    for (Eigen::Index i = 0; i < 40; ++i) one(i, 0) = records[static_cast<std::size_t>(i)].subjective[0];
    const auto kde = fit_kde(one, 3);
    const double h = kde.bandwidth[0];
    const double lo = one.minCoeff() - 6 * h, hi = one.maxCoeff() + 6 * h;
    const int steps = 40000;
    const double dx = (hi - lo) / steps;
    double integral = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double v = lo + dx * i;
        integral += kde_density(kde, std::span<const double>(&v, 1)) * ((i == 0 || i == steps) ? 0.5 : 1.0);
    }
    integral *= dx;
    if (std::abs(integral - 1.0) > 1e-3) failed.push_back("kde integral " + fmt(integral, 6));

    // SVR dual box constraints.
    const Matrix y = subjective_matrix(records);
    for (double c : {1.0, 10.0, 100.0}) {
        std::vector<double> z(y.rows());
        for (Eigen::Index i = 0; i < y.rows(); ++i) z[static_cast<std::size_t>(i)] = y(i, 1);
        const auto sol = solve_epsilon_svr(rbf_kernel(encoded.values, encoded.values, 0.1), z, c, 0.1, 1e-3, 10'000'000);
        double balance = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (sol.alpha[i] < 0 || sol.alpha[i] > c || sol.alpha_star[i] < 0 || sol.alpha_star[i] > c) {
                failed.push_back("svr box C=" + fmt(c, 0));
                break;
            }
            balance += sol.alpha[i] - sol.alpha_star[i];
        }
        if (std::abs(balance) > 1e-8) failed.push_back("svr equality C=" + fmt(c, 0));
    }

    std::string detail = failed.empty() ? "rec_acc, clamping, one-hot, KDE integral " + fmt(integral, 6) + ", SVR box" : "";
    for (const auto& f : failed) detail += f + "; ";
    return pass_if(failed.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string suite = "all";
    std::string data;
    std::string work = (fs::temp_directory_path() / "coffee_acceptance").string();
    app.add_option("--suite", suite)->check(CLI::IsMember({"all", "core", "cqi"}));
    app.add_option("--data", data, "Review CSV for the reproduction checks");
    app.add_option("--work", work, "Scratch directory");
    CLI11_PARSE(app, argc, argv);

    const bool core = suite != "cqi";
    const bool cqi = suite != "core";
    std::vector<CoffeeRecord> records;
    std::string missing_reason;
    if (cqi) {
        if (data.empty() || !fs::exists(data)) {
            missing_reason = "review file not found" + (data.empty() ? std::string() : ": " + data);
        } else {
            records = clean(load_csv(data));
            std::cout << "# " << records.size() << " cleaned rows from " << data << "\n";
        }
    }
    fs::remove_all(work);
    fs::create_directories(work);

    using Check = std::function<Result()>;
    struct Criterion {
        std::string name;
        bool needs_data;
        Check check;
    };
    const std::vector<Criterion> criteria{
        {"rf_reproduction", true, [&] { return rf_reproduction(records); }},
        {"mlp_svr_reproduction", true, [&] { return mlp_svr_reproduction(records); }},
        {"accuracy_sweep_reproduction", true, [&] { return sweep_reproduction(records); }},
        {"oracle_exactness", false, oracle_exactness},
        {"gradient_check", false, gradient_check},
        {"degenerate_protocol", false, degenerate_protocol},
        {"determinism", false, [&] { return determinism(work); }},
        {"property_suites", false, property_suites},
    };

    int passed = 0, failed = 0, not_run = 0;
    for (const auto& c : criteria) {
        if ((c.needs_data && !cqi) || (!c.needs_data && !core)) continue;
        Result r;
        if (c.needs_data && !missing_reason.empty()) {
            r = {Outcome::not_run, missing_reason};
        } else {
            try {
                r = c.check();
            } catch (const std::exception& e) {
                r = {Outcome::fail, std::string("threw: ") + e.what()};
            }
        }
        const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : "NOT RUN";
        (r.outcome == Outcome::pass ? passed : r.outcome == Outcome::fail ? failed : not_run)++;
        std::cout << tag << "  " << c.name << "  " << r.detail << std::endl;
    }
    std::cout << "# " << passed << " passed, " << failed << " failed, " << not_run << " not run\n";
    fs::remove_all(work);
    if (failed) return 1;
    return passed == 0 ? 77 : 0;
}

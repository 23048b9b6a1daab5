// coffee: command line front end for the bean recommender.
//
//   coffee ingest    DATA             clean a review table
//   coffee train     FAMILY --data    fit and save a model
//   coffee evaluate  [FAMILY] --data  k-fold CV RMSE
//   coffee simulate  --data           recommendation accuracy sweep
//   coffee recommend --data --model   one kNN query
//   coffee serve     --data --model   HTTP service
//
// Machine-readable outputs go under --out. Every run logs its seed and the
// effective configuration so it can be repeated exactly.

#include "coffee/dataset.hpp"
#include "coffee/evaluation.hpp"
#include "coffee/feature_selection.hpp"
#include "coffee/recommender.hpp"
#include "coffee/regressor.hpp"
#include "coffee/service.hpp"
#include "coffee/sweep.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string config_path;
    int verbose = 0;
    std::string out_dir = "out";
    json config = json::object();
};

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

coffee::ModelConfig model_config(const Globals& g) {
    auto cfg = g.config.get<coffee::ModelConfig>();
    cfg.reseed(g.seed);
    return cfg;
}

std::vector<coffee::CoffeeRecord> load_records(const fs::path& path) {
    coffee::CleaningLog log;
    const auto raw = coffee::load_csv(path);
    auto records = coffee::clean(raw, &log);
    spdlog::info("{}: {} rows read, {} kept", path.string(), log.rows_in, log.rows_kept);
    if (records.empty()) throw std::runtime_error("no valid records in " + path.string());
    return records;
}

const std::map<std::string, std::string> kFamilyNames{{"rf", "rf"}, {"forest", "forest"}, {"svr", "svr"}, {"mlp", "mlp"}};

coffee::ModelFamily family_of(const std::string& name) {
    auto f = coffee::parse_family(name);
    if (!f) throw CLI::ValidationError("family", "unknown model family '" + name + "'");
    return *f;
}

// "aroma=7.5,flavour=8" or repeated flags; unspecified attributes fall back
// to the space median.
coffee::SubjectiveVector parse_preferences(const std::vector<std::string>& items,
                                           const coffee::ServiceSnapshot& snapshot) {
    coffee::SubjectiveVector u{};
    for (std::size_t a = 0; a < coffee::kSubjectiveCount; ++a) u[a] = snapshot.attributes[a].median;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--pref", "expected NAME=VALUE, got '" + item + "'");
        const auto name = item.substr(0, eq);
        auto it = std::find(coffee::kSubjectiveNames.begin(), coffee::kSubjectiveNames.end(), name);
        if (it == coffee::kSubjectiveNames.end()) throw CLI::ValidationError("--pref", "unknown attribute '" + name + "'");
        double value = 0.0;
        try {
            value = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--pref", "attribute '" + name + "' needs a number");
        }
        u[static_cast<std::size_t>(it - coffee::kSubjectiveNames.begin())] = value;
    }
    return u;
}

volatile std::sig_atomic_t g_stop_requested = 0;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coffee bean recommender: data cleaning, regression, evaluation and kNN service"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON file with forest/svr/mlp/sweep/service sections");
    app.add_flag("-v,--verbose", g.verbose, "More logging (repeatable)");
    app.add_option("--out", g.out_dir, "Directory for machine-readable outputs")->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Clean a CQI review table");
    std::string ingest_path;
    bool diagnostics = false;
    ingest->add_option("dataset", ingest_path, "Source CSV")->required();
    ingest->add_flag("--diagnostics", diagnostics, "Also write correlation and feature-ranking tables");

    // train
    auto* train = app.add_subcommand("train", "Fit a model and save it");
    std::string train_family, train_data, model_out;
    train->add_option("family", train_family, "rf | svr | mlp")->required()->check(CLI::IsMember(kFamilyNames));
    train->add_option("--data", train_data, "Cleaned or source CSV")->required();
    train->add_option("--model", model_out, "Model file (default: OUT/model-FAMILY.json)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Cross-validated RMSE");
    std::string eval_family = "all", eval_data;
    std::size_t folds = 10;
    evaluate->add_option("family", eval_family, "rf | svr | mlp | all")
        ->capture_default_str()
        ->check(CLI::IsMember({"rf", "forest", "svr", "mlp", "all"}));
    evaluate->add_option("--data", eval_data, "Cleaned or source CSV")->required();
    evaluate->add_option("--folds", folds, "Number of folds")->capture_default_str()->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Recommendation accuracy sweep over prediction sizes");
    std::string sim_data, sim_family = "rf";
    coffee::SweepConfig sweep;
    simulate->add_option("--data", sim_data, "Cleaned or source CSV")->required();
    simulate->add_option("--k", sweep.k, "Recommendations per user")->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    simulate->add_option("--m", sweep.m_values, "Prediction sizes in [0, 1]")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--users", sweep.n_users, "Simulated users")->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    simulate->add_option("--repetitions", sweep.repetitions, "Random partitions per prediction size")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    simulate->add_option("--family", sim_family, "Regressor used for the hidden beans")
        ->capture_default_str()
        ->check(CLI::IsMember(kFamilyNames));

    // shared by recommend and serve
    coffee::ServiceConfig service;
    std::string unreviewed;
    auto add_space_options = [&](CLI::App* cmd) {
        cmd->add_option("--data", service.dataset_path, "Reviewed beans CSV")->required();
        cmd->add_option("--model", service.model_path, "Model file from `coffee train`")->required();
        cmd->add_option("--unreviewed", unreviewed, "CSV of beans without reviews; their scores are predicted");
        cmd->add_option("--hide-fraction", service.hide_fraction, "Treat this share of the data as unreviewed")
            ->check(CLI::Range(0.0, 1.0));
    };

    auto* recommend = app.add_subcommand("recommend", "Answer one preference query");
    add_space_options(recommend);
    std::vector<std::string> prefs;
    std::size_t rec_k = 5;
    recommend->add_option("--pref", prefs, "NAME=VALUE, e.g. sweetness=9 (others default to the median)")->delimiter(',');
    recommend->add_option("--k", rec_k, "Number of beans")->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));

    auto* serve = app.add_subcommand("serve", "Run the HTTP recommendation service");
    add_space_options(serve);
    serve->add_option("--host", service.host)->capture_default_str();
    serve->add_option("--port", service.port)->capture_default_str()->check(CLI::Range(0, 65535));
    serve->add_option("--k", service.default_k, "Default k")->capture_default_str()->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    serve->add_flag("--dev", service.dev, "Send permissive CORS headers for a local UI");

    CLI11_PARSE(app, argc, argv);

    auto logger = spdlog::stderr_color_mt("coffee");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(g.verbose > 0 ? spdlog::level::debug : spdlog::level::info);

    try {
        if (!g.config_path.empty()) g.config = read_json(g.config_path);
        const fs::path out = g.out_dir;
        spdlog::info("seed {}", g.seed);

        if (*ingest) {
            coffee::CleaningLog log;
            const auto raw = coffee::load_csv(ingest_path);
            const auto records = coffee::clean(raw, &log);
            fs::create_directories(out);
            coffee::write_cleaned_csv(out / "cleaned.csv", records);
            write_text(out / "cleaning_log.txt", log.to_text());
            if (records.empty()) spdlog::warn("no rows survived cleaning; wrote an empty dataset");
            spdlog::info("{} of {} rows kept -> {}", log.rows_kept, log.rows_in, (out / "cleaned.csv").string());
            if (diagnostics && records.size() >= 3) {
                std::ostringstream pearson;
                coffee::write_pearson_tsv(pearson, coffee::pearson_matrix(records));
                write_text(out / "pearson.tsv", pearson.str());

                const auto x = coffee::selection_candidates(raw, records);
                const auto y = coffee::subjective_matrix(records);
                const auto uni = coffee::univariate_scores(x.values, y);
                coffee::ForestConfig fc;
                fc.seed = g.seed;
                const auto tree = coffee::tree_importance(x.values, y, fc);
                std::ostringstream ranking;
                ranking << "column\tunivariate_f\tzero_variance\ttree_importance\n";
                for (Eigen::Index c = 0; c < x.cols(); ++c)
                    ranking << x.columns[static_cast<std::size_t>(c)].name() << '\t' << uni.mean[c] << '\t'
                            << uni.zero_variance[static_cast<std::size_t>(c)] << '\t' << tree.importance[c] << '\n';
                write_text(out / "feature_scores.tsv", ranking.str());
            }
            return 0;
        }

        if (*train) {
            const auto family = family_of(train_family);
            const auto records = load_records(train_data);
            const auto cfg = model_config(g);
            spdlog::debug("config {}", json(cfg).dump());
            const auto model = coffee::train_regressor(records, family, cfg);
            if (!model.metadata().converged) spdlog::warn("SVR solver hit its iteration cap on at least one target");
            const fs::path path = model_out.empty() ? out / ("model-" + std::string(coffee::to_string(family)) + ".json")
                                                    : fs::path(model_out);
            if (path.has_parent_path()) fs::create_directories(path.parent_path());
            model.save(path);
            spdlog::info("saved {} model to {}", coffee::to_string(family), path.string());
            return 0;
        }

        if (*evaluate) {
            const auto records = load_records(eval_data);
            const auto cfg = model_config(g);
            std::vector<coffee::ModelFamily> families;
            if (eval_family == "all") families = {coffee::ModelFamily::forest, coffee::ModelFamily::mlp, coffee::ModelFamily::svr};
            else families = {family_of(eval_family)};
            std::vector<coffee::CvReport> reports;
            json j = json::array();
            for (auto f : families) {
                spdlog::info("{}-fold CV of {}", folds, coffee::to_string(f));
                reports.push_back(coffee::cross_validate(records, f, cfg, folds, g.seed));
                spdlog::info("{} average RMSE {:.4f}", coffee::to_string(f), reports.back().average);
                if (!reports.back().converged) spdlog::warn("SVR solver hit its iteration cap in some fold");
                j.push_back(reports.back());
            }
            std::ostringstream table;
            coffee::write_cv_table(table, reports);
            write_text(out / "cv_report.json", pretty({{"reports", j}, {"config", cfg}}));
            write_text(out / "cv_table.tsv", table.str());
            std::cout << table.str();
            return 0;
        }

        if (*simulate) {
            if (g.config.contains("sweep")) {
                const auto& s = g.config["sweep"];
                // Command-line values win over the file.
                if (simulate->count("--k") == 0) sweep.k = s.value("k", sweep.k);
                if (simulate->count("--m") == 0) sweep.m_values = s.value("m_values", sweep.m_values);
                if (simulate->count("--users") == 0) sweep.n_users = s.value("n_users", sweep.n_users);
                if (simulate->count("--repetitions") == 0) sweep.repetitions = s.value("repetitions", sweep.repetitions);
                if (simulate->count("--family") == 0) sim_family = s.value("family", sim_family);
            }
            const auto records = load_records(sim_data);
            sweep.family = family_of(sim_family);
            sweep.model = model_config(g);
            sweep.seed = g.seed;
            spdlog::info("sweep: k={} users={} repetitions={} model={}", sweep.k, sweep.n_users, sweep.repetitions,
                         coffee::to_string(sweep.family));
            const auto report = coffee::accuracy_sweep(records, sweep);
            std::ostringstream table;
            coffee::write_accuracy_table(table, report);
            json j = report;
            j["config"] = sweep.model;
            j["m_values"] = sweep.m_values;
            write_text(out / "accuracy_report.json", pretty(j));
            write_text(out / "accuracy_table.tsv", table.str());
            std::cout << table.str();
            return 0;
        }

        if (!unreviewed.empty()) service.unreviewed_path = unreviewed;
        service.seed = g.seed;

        if (*recommend) {
            const auto snapshot = coffee::load_snapshot(service);
            const auto u = parse_preferences(prefs, snapshot);
            json request = {{"k", rec_k}, {"preferences", json::object()}};
            for (std::size_t a = 0; a < coffee::kSubjectiveCount; ++a)
                request["preferences"][std::string(coffee::kSubjectiveNames[a])] = u[a];
            const auto result = coffee::handle_recommend(snapshot, request.dump());
            std::cout << json::parse(result.body).dump(2) << "\n";
            return result.status == 200 ? 0 : 1;
        }

        if (*serve) {
            if (g.config.contains("service")) {
                auto file = g.config["service"].get<coffee::ServiceConfig>();
                if (serve->count("--host") == 0) service.host = file.host;
                if (serve->count("--port") == 0) service.port = file.port;
                if (serve->count("--k") == 0) service.default_k = file.default_k;
                if (serve->count("--dev") == 0) service.dev = file.dev;
            }
            // Block the signals before any thread starts; one thread waits on them.
            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGHUP);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);

            auto snapshot = std::make_shared<const coffee::ServiceSnapshot>(coffee::load_snapshot(service));
            coffee::Service server(snapshot, service.dev);
            server.set_access_log([](std::string_view line) { spdlog::debug("{}", line); });
            const int port = server.bind(service.host, service.port);
            if (port < 0) throw std::runtime_error("cannot bind " + service.host + ":" + std::to_string(service.port));
            spdlog::info("serving {} beans on http://{}:{} (space {})", snapshot->space.size(), service.host, port,
                         snapshot->space.fingerprint());

            std::thread watcher([&] {
                for (;;) {
                    int sig = 0;
                    sigwait(&signals, &sig);
                    if (sig == SIGHUP) {
                        try {
                            auto next = std::make_shared<const coffee::ServiceSnapshot>(coffee::load_snapshot(service));
                            server.swap(next);
                            spdlog::info("reloaded: space {}", next->space.fingerprint());
                        } catch (const std::exception& e) {
                            spdlog::error("reload failed, keeping the current space: {}", e.what());
                        }
                        continue;
                    }
                    g_stop_requested = 1;
                    server.stop();
                    return;
                }
            });
            server.listen();
            if (!g_stop_requested) {
                // listen() returned on its own; wake the watcher so it can exit.
                pthread_kill(watcher.native_handle(), SIGTERM);
            }
            watcher.join();
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}

#pragma once

#include "coffee/dataset.hpp"
#include "coffee/recommender.hpp"
#include "coffee/regressor.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace coffee {

struct ServiceConfig {
    std::filesystem::path dataset_path;                     // reviewed beans (raw or cleaned CSV)
    std::filesystem::path model_path;
    std::optional<std::filesystem::path> unreviewed_path;   // objective-only beans to predict
    double hide_fraction = 0.0;  // treat this share of the dataset as unreviewed
    std::size_t default_k = 5;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 0;
    std::string log_level = "info";
    bool dev = false;  // permissive CORS headers for a local UI
};

void to_json(nlohmann::json& j, const ServiceConfig& c);
void from_json(const nlohmann::json& j, ServiceConfig& c);

struct AttributeSummary {
    std::string name;
    double min = 0.0;  // accepted query range
    double max = kScoreCeiling;
    double median = 0.0;  // over the space, a sensible slider default
};

// Everything a request reads; immutable once built and swapped in whole.
struct ServiceSnapshot {
    RecommendationSpace space;
    std::string model_fingerprint;
    std::vector<AttributeSummary> attributes;
    std::size_t default_k = 5;
};

ServiceSnapshot build_snapshot(std::span<const CoffeeRecord> reviewed, std::span<const CoffeeRecord> unreviewed,
                               const TrainedRegressor& model, std::size_t default_k);
// Reads the files named in config. Never writes to them.
ServiceSnapshot load_snapshot(const ServiceConfig& config);

struct HttpResult {
    int status = 200;
    std::string body;  // JSON
};

HttpResult handle_health(const ServiceSnapshot& s);
HttpResult handle_metadata(const ServiceSnapshot& s);
HttpResult handle_bean(const ServiceSnapshot& s, std::string_view id);
HttpResult handle_recommend(const ServiceSnapshot& s, std::string_view body);

/// HTTP front end. Each request pins the snapshot current at its start, so a
/// reload never mixes two spaces within one response.
class Service {
public:
    Service(std::shared_ptr<const ServiceSnapshot> snapshot, bool dev);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    std::shared_ptr<const ServiceSnapshot> snapshot() const;
    void swap(std::shared_ptr<const ServiceSnapshot> next);

    // Binds (port 0 picks a free port) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    // Blocks serving requests until stop().
    void listen();
    void stop();

    // Receives one line per request: method, path, status.
    void set_access_log(std::function<void(std::string_view)> log);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace coffee

#include "coffee/service.hpp"

#include "coffee/partition.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <mutex>
#include <stdexcept>

namespace coffee {

using nlohmann::json;

void to_json(json& j, const ServiceConfig& c) {
    j = {{"dataset", c.dataset_path.string()}, {"model", c.model_path.string()},
         {"hide_fraction", c.hide_fraction},   {"default_k", c.default_k},
         {"host", c.host},                     {"port", c.port},
         {"seed", c.seed},                     {"log_level", c.log_level},
         {"dev", c.dev}};
    j["unreviewed"] = c.unreviewed_path ? json(c.unreviewed_path->string()) : json(nullptr);
}

void from_json(const json& j, ServiceConfig& c) {
    c = ServiceConfig{};
    if (j.contains("dataset")) c.dataset_path = j["dataset"].get<std::string>();
    if (j.contains("model")) c.model_path = j["model"].get<std::string>();
    if (j.contains("unreviewed") && !j["unreviewed"].is_null()) c.unreviewed_path = j["unreviewed"].get<std::string>();
    c.hide_fraction = j.value("hide_fraction", c.hide_fraction);
    c.default_k = j.value("default_k", c.default_k);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.seed = j.value("seed", c.seed);
    c.log_level = j.value("log_level", c.log_level);
    c.dev = j.value("dev", c.dev);
    if (c.default_k < 1) throw std::invalid_argument("service default_k must be at least 1");
}

ServiceSnapshot build_snapshot(std::span<const CoffeeRecord> reviewed, std::span<const CoffeeRecord> unreviewed,
                               const TrainedRegressor& model, std::size_t default_k) {
    if (default_k < 1) throw std::invalid_argument("service default_k must be at least 1");
    std::vector<PredictedBean> predicted;
    if (!unreviewed.empty()) {
        const Matrix scores = model.predict(unreviewed);
        for (std::size_t i = 0; i < unreviewed.size(); ++i) {
            PredictedBean b;
            b.bean_id = unreviewed[i].id;
            for (std::size_t a = 0; a < kSubjectiveCount; ++a)
                b.subjective[a] = scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
            b.display = display_of(unreviewed[i].properties);
            predicted.push_back(std::move(b));
        }
    }
    ServiceSnapshot s;
    s.model_fingerprint = model.fingerprint();
    s.space = RecommendationSpace::build(reviewed, predicted, s.model_fingerprint);
    if (s.space.empty()) throw std::invalid_argument("recommendation space is empty");
    s.default_k = default_k;
    for (std::size_t a = 0; a < kSubjectiveCount; ++a) {
        std::vector<double> values;
        for (const auto& e : s.space.entries()) values.push_back(e.subjective[a]);
        std::sort(values.begin(), values.end());
        const auto n = values.size();
        const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
        s.attributes.push_back({std::string(kSubjectiveNames[a]), 0.0, kScoreCeiling, median});
    }
    return s;
}

ServiceSnapshot load_snapshot(const ServiceConfig& config) {
    const auto raw = load_csv(config.dataset_path);
    auto records = clean(raw);
    const auto model = TrainedRegressor::load(config.model_path);

    std::vector<CoffeeRecord> reviewed, unreviewed;
    if (config.hide_fraction > 0.0) {
        const auto split = partition(records, config.hide_fraction, config.seed);
        std::vector<bool> hidden(records.size(), false);
        for (auto id : split.hidden_ids) hidden[id] = true;
        for (const auto& r : records) (hidden[r.id] ? unreviewed : reviewed).push_back(r);
    } else {
        reviewed = std::move(records);
    }
    if (config.unreviewed_path) {
        std::size_t next_id = 0;
        for (const auto& r : reviewed) next_id = std::max(next_id, r.id + 1);
        for (const auto& r : unreviewed) next_id = std::max(next_id, r.id + 1);
        const auto extra_raw = load_csv(*config.unreviewed_path, required_objective_columns());
        const auto extra = clean_unreviewed(extra_raw, next_id);
        unreviewed.insert(unreviewed.end(), extra.begin(), extra.end());
    }
    return build_snapshot(reviewed, unreviewed, model, config.default_k);
}

namespace {

json display_json(const DisplayMetadata& d) {
    return {{"species", d.species},
            {"country_of_origin", d.country_of_origin},
            {"region", d.region},
            {"variety", d.variety},
            {"processing_method", d.processing_method}};
}

json scores_json(const SubjectiveVector& v) {
    json j = json::object();
    for (std::size_t a = 0; a < kSubjectiveCount; ++a) j[std::string(kSubjectiveNames[a])] = v[a];
    return j;
}

HttpResult error(int status, std::string_view message, std::string_view field = {}) {
    json j = {{"error", message}};
    if (!field.empty()) j["field"] = field;
    return {status, j.dump()};
}

}  // namespace

HttpResult handle_health(const ServiceSnapshot& s) {
    return {200, json{{"status", "ok"}, {"space_fingerprint", s.space.fingerprint()}}.dump()};
}

HttpResult handle_metadata(const ServiceSnapshot& s) {
    json attrs = json::array();
    for (const auto& a : s.attributes)
        attrs.push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}, {"median", a.median}});
    return {200, json{{"attributes", attrs},
                      {"default_k", s.default_k},
                      {"space_size", s.space.size()},
                      {"metric", s.space.metric()},
                      {"space_fingerprint", s.space.fingerprint()}}
                     .dump()};
}

HttpResult handle_bean(const ServiceSnapshot& s, std::string_view id) {
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(id.data(), id.data() + id.size(), value);
    if (ec != std::errc{} || end != id.data() + id.size()) return error(400, "bean id must be a non-negative integer", "id");
    const auto* entry = s.space.find(value);
    if (!entry) return error(404, "no bean with id " + std::string(id), "id");
    return {200, json{{"bean_id", entry->bean_id},
                      {"subjective", scores_json(entry->subjective)},
                      {"provenance", to_string(entry->provenance)},
                      {"display", display_json(entry->display)}}
                     .dump()};
}

HttpResult handle_recommend(const ServiceSnapshot& s, std::string_view body) {
    json request;
    try {
        request = json::parse(body);
    } catch (const json::parse_error& e) {
        return error(400, std::string("malformed JSON body: ") + e.what());
    }
    if (!request.is_object()) return error(400, "request body must be a JSON object");
    for (const auto& [key, _] : request.items())
        if (key != "preferences" && key != "k") return error(400, "unknown field '" + key + "'", key);

    if (!request.contains("preferences")) return error(400, "missing field 'preferences'", "preferences");
    const auto& prefs = request["preferences"];
    if (!prefs.is_object()) return error(400, "'preferences' must be an object", "preferences");
    for (const auto& [key, _] : prefs.items())
        if (std::find(kSubjectiveNames.begin(), kSubjectiveNames.end(), key) == kSubjectiveNames.end())
            return error(400, "unknown attribute '" + key + "'", "preferences." + key);

    SubjectiveVector u{};
    for (std::size_t a = 0; a < kSubjectiveCount; ++a) {
        const std::string name(kSubjectiveNames[a]);
        const std::string field = "preferences." + name;
        if (!prefs.contains(name)) return error(400, "missing attribute '" + name + "'", field);
        const auto& v = prefs[name];
        if (!v.is_number()) return error(400, "attribute '" + name + "' must be a number", field);
        u[a] = v.get<double>();
        if (!(u[a] >= 0.0 && u[a] <= kScoreCeiling))
            return error(400, "attribute '" + name + "' must lie in [0, 10]", field);
    }

    std::size_t k = s.default_k;
    if (request.contains("k")) {
        const auto& jk = request["k"];
        if (!jk.is_number_integer()) return error(400, "'k' must be an integer", "k");
        const auto value = jk.get<long long>();
        if (value < 1) return error(400, "'k' must be at least 1", "k");
        k = static_cast<std::size_t>(value);
    }
    k = std::min(k, s.space.size());

    json recs = json::array();
    for (const auto& r : s.space.recommend(u, k))
        recs.push_back({{"rank", r.rank},
                        {"bean_id", r.bean_id},
                        {"match_score", r.match_score},
                        {"distance", r.distance},
                        {"provenance", to_string(r.provenance)},
                        {"display", display_json(r.display)}});
    return {200, json{{"recommendations", recs}, {"k", k}, {"space_fingerprint", s.space.fingerprint()}}.dump()};
}

struct Service::Impl {
    httplib::Server server;
    mutable std::mutex mutex;
    std::shared_ptr<const ServiceSnapshot> current;
    std::function<void(std::string_view)> access_log;
};

Service::Service(std::shared_ptr<const ServiceSnapshot> snapshot, bool dev) : impl_(std::make_unique<Impl>()) {
    if (!snapshot) throw std::invalid_argument("service needs a snapshot");
    impl_->current = std::move(snapshot);
    auto& server = impl_->server;

    auto reply = [](httplib::Response& res, const HttpResult& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    // Handlers run on the pinned snapshot; a throw becomes a complete 500 body.
    auto route = [this, reply](auto handler) {
        return [this, reply, handler](const httplib::Request& req, httplib::Response& res) {
            const auto snap = this->snapshot();
            HttpResult result;
            try {
                result = handler(*snap, req);
            } catch (const std::exception& e) {
                result = error(500, std::string("internal error: ") + e.what());
            }
            reply(res, result);
        };
    };

    server.Get("/health", route([](const ServiceSnapshot& s, const httplib::Request&) { return handle_health(s); }));
    server.Get("/metadata", route([](const ServiceSnapshot& s, const httplib::Request&) { return handle_metadata(s); }));
    server.Get(R"(/beans/([^/]+))", route([](const ServiceSnapshot& s, const httplib::Request& req) {
                   return handle_bean(s, req.matches[1].str());
               }));
    server.Post("/recommend", route([](const ServiceSnapshot& s, const httplib::Request& req) {
                    return handle_recommend(s, req.body);
                }));
    server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        reply(res, error(500, "internal error"));
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(json{{"error", "not found"}}.dump(), "application/json");
    });
    if (dev) {
        server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        });
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }
    server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        if (impl_->access_log) impl_->access_log(req.method + " " + req.path + " " + std::to_string(res.status));
    });
}

Service::~Service() { stop(); }

std::shared_ptr<const ServiceSnapshot> Service::snapshot() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->current;
}

void Service::swap(std::shared_ptr<const ServiceSnapshot> next) {
    if (!next) throw std::invalid_argument("service needs a snapshot");
    std::lock_guard lock(impl_->mutex);
    impl_->current = std::move(next);
}

int Service::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

void Service::set_access_log(std::function<void(std::string_view)> log) { impl_->access_log = std::move(log); }

}  // namespace coffee

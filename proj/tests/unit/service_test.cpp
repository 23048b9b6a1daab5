#include "coffee/service.hpp"
#include "test_data.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <thread>

using namespace coffee;
using nlohmann::json;

namespace {

const ServiceSnapshot& shared_snapshot() {
    static const ServiceSnapshot snap = [] {
        const auto records = coffee::test::small_dataset(80);
        const std::span<const CoffeeRecord> all(records);
        const auto model = train_regressor(all.first(60), ModelFamily::forest, {});
        auto unreviewed = std::vector<CoffeeRecord>(all.begin() + 60, all.end());
        for (auto& r : unreviewed) r.id += 1000;
        return build_snapshot(all.first(60), unreviewed, model, 5);
    }();
    return snap;
}

json preferences(double value = 8.0) {
    json p = json::object();
    for (auto name : kSubjectiveNames) p[std::string(name)] = value;
    return p;
}

std::string request(const json& prefs, std::optional<json> k = std::nullopt) {
    json body{{"preferences", prefs}};
    if (k) body["k"] = *k;
    return body.dump();
}

}  // namespace

TEST(ServiceHandlers, HealthAndMetadata) {
    const auto& s = shared_snapshot();
    const auto h = handle_health(s);
    EXPECT_EQ(h.status, 200);
    EXPECT_EQ(json::parse(h.body).at("status"), "ok");
    const auto m = json::parse(handle_metadata(s).body);
    ASSERT_EQ(m.at("attributes").size(), 8u);
    for (const auto& a : m.at("attributes")) {
        EXPECT_EQ(a.at("min"), 0.0);
        EXPECT_EQ(a.at("max"), 10.0);
        EXPECT_GE(a.at("median").get<double>(), 0.0);
    }
    EXPECT_EQ(m.at("space_size"), 80);
    EXPECT_EQ(m.at("default_k"), 5);
    EXPECT_EQ(m.at("metric"), "euclidean");
}

TEST(ServiceHandlers, RecommendReturnsRankedBeans) {
    const auto& s = shared_snapshot();
    const auto r = handle_recommend(s, request(preferences(), 7));
    ASSERT_EQ(r.status, 200) << r.body;
    const auto body = json::parse(r.body);
    const auto& recs = body.at("recommendations");
    ASSERT_EQ(recs.size(), 7u);
    bool any_predicted = false;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].at("rank"), i + 1);
        if (i) EXPECT_LE(recs[i - 1].at("distance").get<double>(), recs[i].at("distance").get<double>());
        const auto prov = recs[i].at("provenance").get<std::string>();
        EXPECT_TRUE(prov == "reviewed" || prov == "predicted");
        any_predicted |= prov == "predicted";
        EXPECT_TRUE(recs[i].at("display").contains("country_of_origin"));
    }
    (void)any_predicted;
    // Default k and clamping to the space size.
    EXPECT_EQ(json::parse(handle_recommend(s, request(preferences())).body).at("recommendations").size(), 5u);
    EXPECT_EQ(json::parse(handle_recommend(s, request(preferences(), 500)).body).at("recommendations").size(), 80u);
}

TEST(ServiceHandlers, RecommendValidation) {
    const auto& s = shared_snapshot();
    auto out_of_range = preferences();
    out_of_range["flavour"] = 12.0;
    auto r = handle_recommend(s, request(out_of_range));
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(json::parse(r.body).at("field"), "preferences.flavour");

    auto missing = preferences();
    missing.erase("body");
    r = handle_recommend(s, request(missing));
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(json::parse(r.body).at("field"), "preferences.body");

    auto text = preferences();
    text["aroma"] = "high";
    EXPECT_EQ(handle_recommend(s, request(text)).status, 400);

    auto unknown = preferences();
    unknown["bitterness"] = 5.0;
    EXPECT_EQ(handle_recommend(s, request(unknown)).status, 400);

    EXPECT_EQ(handle_recommend(s, request(preferences(), 0)).status, 400);
    EXPECT_EQ(handle_recommend(s, request(preferences(), 2.5)).status, 400);
    EXPECT_EQ(handle_recommend(s, request(preferences(), "5")).status, 400);
    EXPECT_EQ(handle_recommend(s, "{not json").status, 400);
    EXPECT_EQ(handle_recommend(s, R"({"preferences":{},"extra":1})").status, 400);
}

TEST(ServiceHandlers, BeanLookup) {
    const auto& s = shared_snapshot();
    const auto id = s.space.entries().front().bean_id;
    const auto r = handle_bean(s, std::to_string(id));
    ASSERT_EQ(r.status, 200);
    const auto body = json::parse(r.body);
    EXPECT_EQ(body.at("bean_id"), id);
    EXPECT_EQ(body.at("subjective").size(), 8u);
    EXPECT_EQ(handle_bean(s, "999999").status, 404);
    EXPECT_EQ(handle_bean(s, "abc").status, 400);
    EXPECT_EQ(handle_bean(s, "-3").status, 400);
}

class LiveService : public ::testing::TestWithParam<bool> {};

TEST_P(LiveService, ServesOverHttp) {
    const bool dev = GetParam();
    Service service(std::make_shared<const ServiceSnapshot>(shared_snapshot()), dev);
    const int port = service.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread server([&] { service.listen(); });
    httplib::Client client("127.0.0.1", port);

    auto health = client.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(health->has_header("Access-Control-Allow-Origin"), dev);

    auto ok = client.Post("/recommend", request(preferences(), 3), "application/json");
    ASSERT_TRUE(ok);
    EXPECT_EQ(ok->status, 200);
    EXPECT_EQ(json::parse(ok->body).at("recommendations").size(), 3u);

    auto bad_pref = preferences();
    bad_pref["acidity"] = -1.0;
    auto bad = client.Post("/recommend", request(bad_pref), "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    EXPECT_NE(bad->body.find("acidity"), std::string::npos);

    auto missing = client.Get("/beans/999999");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    auto meta = client.Get("/metadata");
    ASSERT_TRUE(meta);
    EXPECT_EQ(meta->status, 200);

    service.stop();
    server.join();
}

INSTANTIATE_TEST_SUITE_P(DevMode, LiveService, ::testing::Bool());

TEST(ServiceReload, SwapReplacesTheWholeSnapshot) {
    const auto& s = shared_snapshot();
    Service service(std::make_shared<const ServiceSnapshot>(s), false);
    auto smaller = std::make_shared<ServiceSnapshot>(s);
    std::vector<SpaceEntry> first(s.space.entries().begin(), s.space.entries().begin() + 10);
    smaller->space = RecommendationSpace::build(first);
    service.swap(smaller);
    EXPECT_EQ(service.snapshot()->space.size(), 10u);
}

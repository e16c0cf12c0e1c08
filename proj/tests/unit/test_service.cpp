#include <doctest.h>

#include <thread>

#include "propforge/service.hpp"

// After Eigen: <resolv.h> (pulled in by httplib) defines a _res macro.
#include <httplib.h>

using namespace propforge;
using service::DesignService;

namespace {

const DesignService& ready_service() {
    static const DesignService s = [] {
        const auto d = data::generate_dataset(150, 12);
        auto c = cfm::train_cfm(d, cfm::CfmConfig{2, 32, nn::TrainSchedule{20, 50, 2e-3, 20, 0.1}}, 1).model;
        auto sur = surrogate::train_surrogates(d, {2, 32, nn::TrainSchedule{50, 50, 2e-3, 40, 0.1}}, 1).set;
        return DesignService(std::move(c), std::move(sur), {20, 0});
    }();
    return s;
}

const std::string kDesign = R"({"design": {"n_blades": 4, "P": 1.0, "w_rp": 0.7, "w_c": 0.75, "w_rc": 0.65, "camber": 0.02}})";

}  // namespace

TEST_CASE("generate returns one entry per requested design") {
    const auto r = ready_service().handle_generate(R"({"targets": {"j_star": 1.209, "kt_star": 0.1402}, "count": 100})");
    REQUIRE(r.status == 200);
    CHECK(r.body["count"] == 100);
    REQUIRE(r.body["designs"].size() == 100);
    std::size_t valid = 0;
    for (const auto& d : r.body["designs"]) {
        CHECK(d["valid"].is_boolean());
        valid += d["valid"].get<bool>();
        CHECK(d["condition"]["j_star"] == 1.209);
        CHECK(d["clamped"].is_array());
    }
    CHECK(r.body["stats"]["valid_count"] == valid);
    CHECK(r.body["request"]["tolerance"] == 0.02);
    CHECK(r.body["request"]["targets"]["eta_star"].is_null());
}

TEST_CASE("generate is reproducible for a fixed seed") {
    const std::string req = R"({"targets": {"eta_star": 0.8, "j_star": 1.0, "kt_star": 0.1}, "count": 20, "seed": 5})";
    CHECK(ready_service().handle_generate(req).body.dump() == ready_service().handle_generate(req).body.dump());
}

TEST_CASE("generate rejects bad requests") {
    const auto& s = ready_service();
    auto r = s.handle_generate(R"({"targets": {"j_star": 1.0}, "count": 0})");
    CHECK(r.status == 400);
    CHECK(r.body["error"]["field"] == "count");
    CHECK(s.handle_generate(R"({"targets": {"j_star": 1.0}, "count": 1001})").status == 400);
    CHECK(s.handle_generate(R"({"targets": {}, "count": 3})").status == 400);
    CHECK(s.handle_generate(R"({"targets": {"eta": 0.8}, "count": 3})").body["error"]["field"] == "targets.eta");
    CHECK(s.handle_generate(R"({"targets": {"j_star": 1.0}, "count": 3, "tolerance": -1})").status == 400);
    CHECK(s.handle_generate("not json").status == 400);
    CHECK(s.handle_generate("[1,2]").status == 400);
}

TEST_CASE("generate without checkpoints answers 503") {
    const DesignService empty(std::nullopt, std::nullopt);
    CHECK(empty.handle_generate(R"({"targets": {"j_star": 1.0}, "count": 3})").status == 503);
    CHECK(empty.handle_model_info().body["ready"] == false);
}

TEST_CASE("simulate and geometry endpoints") {
    const auto& s = ready_service();
    const auto sim = s.handle_simulate(kDesign);
    REQUIRE(sim.status == 200);
    CHECK(sim.body["curve"]["J"].size() == 28);
    CHECK(sim.body["labels"]["valid"] == true);
    CHECK(sim.body["labels"].contains("eta_star"));

    auto bad = nlohmann::json::parse(kDesign);
    bad["design"]["n_blades"] = 7;
    const auto r = s.handle_simulate(bad.dump());
    CHECK(r.status == 400);
    CHECK(r.body["error"]["field"] == "design.n_blades");

    const auto g = s.handle_geometry(kDesign);
    REQUIRE(g.status == 200);
    CHECK(g.body["rows"].size() == 10);
    CHECK(s.handle_geometry(kDesign).body == g.body);
    const auto m = s.handle_geometry(R"({"design": {"n_blades": 4, "P": "x"}})");
    CHECK(m.status == 400);
    CHECK(m.body["error"]["field"] == "design.P");
    CHECK(s.handle_geometry("{").status == 400);
}

TEST_CASE("boundary efficiency maximum is a domain outcome") {
    // Heavily pitched two-blade designs keep efficiency rising to the end of the grid.
    const auto r = ready_service().handle_simulate(
        R"({"n_blades": 2, "P": 1.5, "w_rp": 0.9, "w_c": 0.5, "w_rc": 0.8, "camber": 0.05})");
    CHECK(r.status == 200);
    CHECK(r.body["labels"]["valid"].is_boolean());
}

TEST_CASE("model info lists envelopes and ranges") {
    const auto r = ready_service().handle_model_info();
    REQUIRE(r.status == 200);
    CHECK(r.body["ready"] == true);
    CHECK(r.body["design_ranges"].size() == 6);
    CHECK(r.body["label_envelope"]["eta_star"]["lo"].is_number());
}

TEST_CASE("requests are order independent") {
    const auto& s = ready_service();
    const std::string req = R"({"targets": {"j_star": 0.9}, "count": 5, "seed": 1})";
    const auto a = s.handle_generate(req).body;
    s.handle_simulate(kDesign);
    s.handle_generate(R"({"targets": {"eta_star": 0.6}, "count": 7, "seed": 2})");
    CHECK(s.handle_generate(req).body == a);
}

TEST_CASE("http routes") {
    service::Server server(ready_service());
    int port = 0;
    std::thread t([&] { server.listen("127.0.0.1", 0, [&](int p) { port = p; }); });
    server.wait_until_ready();
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);
    auto info = client.Get("/api/model-info");
    REQUIRE(info);
    CHECK(info->status == 200);
    auto gen = client.Post("/api/generate", R"({"targets": {"kt_star": 0.1}, "count": 3})", "application/json");
    REQUIRE(gen);
    CHECK(gen->status == 200);
    CHECK(nlohmann::json::parse(gen->body)["designs"].size() == 3);
    auto geo = client.Post("/api/geometry", kDesign, "application/json");
    REQUIRE(geo);
    CHECK(geo->status == 200);
    auto sim = client.Post("/api/simulate", R"({"design": {}})", "application/json");
    REQUIRE(sim);
    CHECK(sim->status == 400);
    server.stop();
    t.join();
}

// Writes one JSON document holding real service responses (and the requests
// that produced them) for schema validation: [{"schema", "status", "body"}].

#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "propforge/cfm.hpp"
#include "propforge/dataset.hpp"
#include "propforge/service.hpp"
#include "propforge/surrogate.hpp"

using namespace propforge;
using nlohmann::json;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: dump_responses OUT.json\n";
        return 1;
    }
    const auto train = data::generate_dataset(80, 3);
    const cfm::CfmConfig cc{2, 32, nn::TrainSchedule{60, 40, 1e-3, 30, 0.1}};
    const surrogate::SurrogateConfig sc{2, 16, nn::TrainSchedule{60, 40, 1e-3, 30, 0.1}};
    const service::DesignService ready(cfm::train_cfm(train, cc, 1).model,
                                       surrogate::train_surrogates(train, sc, 1).set, {20, 5});
    const service::DesignService empty(std::nullopt, std::nullopt);

    json out = json::array();
    auto add = [&](const std::string& schema, const service::Response& r) {
        out.push_back({{"schema", r.status == 200 ? schema : "ErrorResponse"}, {"status", r.status}, {"body", r.body}});
    };
    auto request = [&](const json& body) {
        out.push_back({{"schema", "GenerateRequest"}, {"status", 0}, {"body", body}});
        return body.dump();
    };

    const json design{{"n_blades", 4}, {"P", 1.1}, {"w_rp", 0.7}, {"w_c", 0.8}, {"w_rc", 0.65}, {"camber", 0.025}};
    add("GenerateResponse", ready.handle_generate(request(
                                {{"targets", {{"eta_star", 0.7}, {"j_star", 0.9}, {"kt_star", 0.12}}}, {"count", 12}})));
    add("GenerateResponse",
        ready.handle_generate(request({{"targets", {{"eta_star", nullptr}, {"j_star", 0.9}, {"kt_star", 0.12}}},
                                       {"count", 5},
                                       {"steps", 10},
                                       {"seed", 42},
                                       {"tolerance", 0.05}})));
    add("GenerateResponse", ready.handle_generate(request({{"targets", {{"eta_star", 0.99}}}, {"count", 3}})));
    add("GenerateResponse", ready.handle_generate(R"({"targets": {"j_star": 1.0}, "count": 0})"));
    add("GenerateResponse", ready.handle_generate(R"({"targets": {"thrust": 1.0}, "count": 2})"));
    add("GenerateResponse", ready.handle_generate("not json"));
    add("GenerateResponse", empty.handle_generate(R"({"targets": {"j_star": 1.0}, "count": 2})"));
    add("SimulateResponse", ready.handle_simulate(json{{"design", design}}.dump()));
    add("SimulateResponse", ready.handle_simulate(design.dump()));
    add("SimulateResponse", ready.handle_simulate(R"({"design": {"n_blades": 7}})"));
    add("GeometryResponse", ready.handle_geometry(json{{"design", design}}.dump()));
    add("GeometryResponse", ready.handle_geometry(R"({"design": {"n_blades": 4, "P": "x"}})"));
    add("ModelInfoResponse", ready.handle_model_info());
    add("ModelInfoResponse", empty.handle_model_info());

    std::ofstream(argv[1]) << out.dump(2) << '\n';
    return 0;
}

#include "propforge/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "propforge/error.hpp"
#include "propforge/geometry.hpp"
#include "propforge/hydro.hpp"

namespace propforge::service {

namespace {

// Thrown while reading a request; carries the offending field.
struct BadRequest {
    std::string message;
    std::string field;
};

nlohmann::json parse_body(const std::string& body) {
    try {
        auto j = nlohmann::json::parse(body);
        if (!j.is_object()) throw BadRequest{"request body must be a JSON object", ""};
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw BadRequest{std::string("malformed JSON: ") + e.what(), ""};
    }
}

std::optional<std::uint64_t> optional_count(const nlohmann::json& j, const std::string& key, std::uint64_t lo,
                                            std::uint64_t hi) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    const bool integral = it->is_number_integer() || (it->is_number_float() && std::floor(it->get<double>()) == it->get<double>());
    if (!integral) throw BadRequest{"'" + key + "' must be an integer", key};
    const double v = it->get<double>();
    if (v < static_cast<double>(lo) || v > static_cast<double>(hi)) {
        throw BadRequest{"'" + key + "' = " + it->dump() + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
                         key};
    }
    return static_cast<std::uint64_t>(v);
}

// Picks the field name out of messages like "missing design field 'P'" or
// "w_rc = 0.9 outside [0.5, 0.8]".
std::string field_from_message(const std::string& m) {
    const auto q = m.find('\'');
    if (q != std::string::npos) {
        const auto e = m.find('\'', q + 1);
        if (e != std::string::npos) return m.substr(q + 1, e - q - 1);
    }
    const auto eq = m.find(" = ");
    if (eq != std::string::npos && m.find(' ') == eq) return m.substr(0, eq);
    return {};
}

geometry::DesignVector read_design(const nlohmann::json& body) {
    const auto it = body.find("design");
    const nlohmann::json& payload = it != body.end() ? *it : body;
    try {
        return geometry::design_from_json(payload);
    } catch (const ParseError& e) {
        const auto f = field_from_message(e.what());
        throw BadRequest{e.what(), f.empty() ? "design" : "design." + f};
    } catch (const DomainError& e) {
        const auto f = field_from_message(e.what());
        throw BadRequest{e.what(), f.empty() ? "design" : "design." + f};
    }
}

nlohmann::json labels_json(const hydro::LabelVector& l) { return hydro::to_json(l); }

nlohmann::json design_ranges_json() {
    auto out = nlohmann::json::array();
    for (const auto& r : geometry::kDesignRanges) out.push_back({{"name", r.name}, {"lo", r.lo}, {"hi", r.hi}});
    return out;
}

template <typename Fn>
Response guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const BadRequest& e) {
        return error_response(400, e.message, e.field);
    } catch (const MissingArtifactError& e) {
        return error_response(503, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

}  // namespace

Response error_response(int status, const std::string& message, const std::string& field) {
    nlohmann::json err{{"status", status}, {"message", message}};
    if (!field.empty()) err["field"] = field;
    return {status, {{"error", err}}};
}

DesignService::DesignService(std::optional<cfm::CfmModel> cfm, std::optional<surrogate::SurrogateSet> surrogates,
                             ServiceOptions options)
    : cfm_(std::move(cfm)), surrogates_(std::move(surrogates)), options_(options), source_("in-memory") {}

DesignService DesignService::from_directory(const std::filesystem::path& dir, ServiceOptions options) {
    std::optional<cfm::CfmModel> c;
    std::optional<surrogate::SurrogateSet> s;
    try {
        c = cfm::load_cfm(dir / "cfm.json");
    } catch (const MissingArtifactError&) {
    }
    try {
        s = surrogate::load_surrogates(dir);
    } catch (const MissingArtifactError&) {
    }
    DesignService out(std::move(c), std::move(s), options);
    out.source_ = dir.string();
    return out;
}

Response DesignService::handle_generate(const std::string& raw) const {
    return guarded([&]() -> Response {
        const auto body = parse_body(raw);
        cfm::TargetSpec spec;
        const auto targets = body.find("targets");
        if (targets == body.end() || !targets->is_object()) {
            throw BadRequest{"'targets' must be an object with eta_star, j_star and/or kt_star", "targets"};
        }
        for (const auto& [key, value] : targets->items()) {
            std::optional<double>* slot = key == "eta_star" ? &spec.eta_star
                                          : key == "j_star" ? &spec.j_star
                                          : key == "kt_star" ? &spec.kt_star
                                                             : nullptr;
            if (!slot) throw BadRequest{"unknown target '" + key + "'", "targets." + key};
            if (value.is_null()) continue;
            if (!value.is_number() || !std::isfinite(value.get<double>())) {
                throw BadRequest{"target '" + key + "' must be a number or null", "targets." + key};
            }
            *slot = value.get<double>();
        }
        if (!spec.eta_star && !spec.j_star && !spec.kt_star) {
            throw BadRequest{"at least one target must be set", "targets"};
        }
        if (!body.contains("count")) throw BadRequest{"'count' is required", "count"};
        const auto count = *optional_count(body, "count", 1, kMaxGenerateCount);
        const auto steps = optional_count(body, "steps", 1, kMaxSteps).value_or(options_.default_steps);
        const auto seed =
            optional_count(body, "seed", 0, std::numeric_limits<std::uint64_t>::max() >> 11).value_or(options_.default_seed);
        double tol = kDefaultTolerance;
        if (const auto it = body.find("tolerance"); it != body.end() && !it->is_null()) {
            if (!it->is_number() || !(it->get<double>() > 0.0)) {
                throw BadRequest{"'tolerance' must be a positive number", "tolerance"};
            }
            tol = it->get<double>();
        }
        if (!ready()) {
            return error_response(503, "model checkpoints are not loaded (train the cfm and surrogates first)");
        }

        const auto report = cfm::sample_designs(*cfm_, spec, count, steps, seed);
        const auto predicted = surrogate::predict_labels(*surrogates_, report.designs);
        const auto valid = surrogate::validate_predictions(predicted, spec, tol);

        auto designs = nlohmann::json::array();
        std::size_t valid_count = 0, clamped_count = 0;
        std::array<double, hydro::kLabelDims> sum{}, lo, hi;
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(-std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < report.designs.size(); ++i) {
            auto clamped = nlohmann::json::array();
            for (std::size_t k = 0; k < geometry::kDesignDims; ++k) {
                if (report.clamped[i][k]) clamped.push_back(geometry::kDesignRanges[k].name);
            }
            if (!clamped.empty()) ++clamped_count;
            if (valid[i]) ++valid_count;
            const auto p = hydro::to_array(predicted[i]);
            for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
                sum[k] += p[k];
                lo[k] = std::min(lo[k], p[k]);
                hi[k] = std::max(hi[k], p[k]);
            }
            designs.push_back({{"index", i},
                               {"design", geometry::to_json(report.designs[i])},
                               {"predicted", labels_json(predicted[i])},
                               {"valid", static_cast<bool>(valid[i])},
                               {"clamped", clamped},
                               {"condition", labels_json(report.sampled_conditions[i])}});
        }
        nlohmann::json mean, mn, mx;
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            const std::string name(hydro::kLabelNames[k]);
            mean[name] = sum[k] / static_cast<double>(count);
            mn[name] = lo[k];
            mx[name] = hi[k];
        }
        nlohmann::json echo_targets = nlohmann::json::object();
        const auto wanted = spec.as_array();
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            echo_targets[std::string(hydro::kLabelNames[k])] = wanted[k] ? nlohmann::json(*wanted[k]) : nlohmann::json(nullptr);
        }
        return {200,
                {{"count", count},
                 {"designs", designs},
                 {"stats",
                  {{"valid_count", valid_count},
                   {"valid_fraction", static_cast<double>(valid_count) / static_cast<double>(count)},
                   {"clamped_count", clamped_count},
                   {"predicted_mean", mean},
                   {"predicted_min", mn},
                   {"predicted_max", mx}}},
                 {"warnings", report.warnings},
                 {"request",
                  {{"targets", echo_targets}, {"count", count}, {"steps", steps}, {"seed", seed}, {"tolerance", tol}}}}};
    });
}

Response DesignService::handle_simulate(const std::string& raw) const {
    return guarded([&]() -> Response {
        const auto design = read_design(parse_body(raw));
        auto out = hydro::to_json(hydro::simulate(design));
        out["design"] = geometry::to_json(design);
        return {200, out};
    });
}

Response DesignService::handle_geometry(const std::string& raw) const {
    return guarded([&]() -> Response {
        const auto design = read_design(parse_body(raw));
        const auto table = geometry::export_sections(geometry::build_blade(design));
        auto columns = nlohmann::json::array();
        for (const auto c : geometry::SectionTable::kColumns) columns.push_back(c);
        return {200, {{"design", geometry::to_json(design)}, {"columns", columns}, {"rows", geometry::to_json(table)}}};
    });
}

Response DesignService::handle_model_info() const {
    return guarded([&]() -> Response {
        nlohmann::json cfm_info{{"loaded", cfm_.has_value()}};
        nlohmann::json envelope = nullptr;
        if (cfm_) {
            const auto& c = cfm_->field.config();
            cfm_info["hidden_layers"] = c.hidden_layers;
            cfm_info["hidden_width"] = c.hidden_width;
            cfm_info["parameters"] = cfm_->field.parameter_count();
            envelope = nlohmann::json::object();
            for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
                envelope[std::string(hydro::kLabelNames[k])] = {{"lo", cfm_->envelope.lo[k]}, {"hi", cfm_->envelope.hi[k]}};
            }
        }
        nlohmann::json sur_info{{"loaded", surrogates_.has_value()}};
        if (surrogates_) {
            const auto& c = surrogates_->models[0].config();
            sur_info["hidden_layers"] = c.hidden_layers;
            sur_info["hidden_width"] = c.hidden_width;
            std::size_t params = 0;
            for (const auto& m : surrogates_->models) params += m.parameter_count();
            sur_info["parameters"] = params;
        }
        return {200,
                {{"ready", ready()},
                 {"source", source_},
                 {"checkpoints", {{"cfm", cfm_info}, {"surrogates", sur_info}}},
                 {"label_envelope", envelope},
                 {"design_ranges", design_ranges_json()},
                 {"defaults",
                  {{"steps", options_.default_steps},
                   {"seed", options_.default_seed},
                   {"tolerance", kDefaultTolerance},
                   {"max_count", kMaxGenerateCount}}}}};
    });
}

struct Server::Impl {
    const DesignService& service;
    httplib::Server http;
};

Server::Server(const DesignService& service) : impl_(new Impl{service, {}}) {
    auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json; charset=utf-8");
    };
    auto& http = impl_->http;
    const DesignService* svc = &service;
    http.Post("/api/generate", [svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->handle_generate(req.body));
    });
    http.Post("/api/simulate", [svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->handle_simulate(req.body));
    });
    http.Post("/api/geometry", [svc, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->handle_geometry(req.body));
    });
    http.Get("/api/model-info", [svc, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, svc->handle_model_info());
    });
    // Lets a browser UI served from another origin call the API.
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    http.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

Server::~Server() {
    stop();
    delete impl_;
}

bool Server::listen(const std::string& host, int port, const std::function<void(int)>& on_ready) {
    int bound = port;
    if (port == 0) {
        bound = impl_->http.bind_to_any_port(host);
        if (bound <= 0) return false;
    } else if (!impl_->http.bind_to_port(host, port)) {
        return false;
    }
    if (on_ready) on_ready(bound);
    return impl_->http.listen_after_bind();
}

void Server::stop() {
    if (impl_->http.is_running()) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace propforge::service

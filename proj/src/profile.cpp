#include "propforge/profile.hpp"

#include <charconv>
#include <functional>

#include "propforge/csv.hpp"
#include "propforge/error.hpp"

namespace propforge {

namespace {

std::size_t parse_count(const std::string& key, std::string_view v) {
    std::size_t out = 0;
    v = csv::trim(v);
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ParseError("'" + key + "' expects a non-negative integer, got '" + std::string(v) + "'");
    }
    return out;
}

double parse_real(const std::string& key, std::string_view v) {
    try {
        return csv::parse_number(v, 0, key);
    } catch (const ParseError&) {
        throw ParseError("'" + key + "' expects a number, got '" + std::string(v) + "'");
    }
}

std::vector<std::size_t> parse_counts(const std::string& key, std::string_view v) {
    std::vector<std::size_t> out;
    for (auto field : csv::split_row(v)) out.push_back(parse_count(key, field));
    return out;
}

void apply_schedule_key(nn::TrainSchedule& s, const std::string& key, std::string_view field, std::string_view v) {
    if (field == "epochs") {
        s.epochs = parse_count(key, v);
    } else if (field == "batch_size") {
        s.batch_size = parse_count(key, v);
    } else if (field == "lr") {
        s.lr_initial = parse_real(key, v);
    } else if (field == "lr_drop_epoch") {
        s.lr_drop_epoch = parse_count(key, v);
    } else if (field == "lr_drop_factor") {
        s.lr_drop_factor = parse_real(key, v);
    } else {
        throw ParseError("unknown config key '" + key + "'");
    }
}

nlohmann::json schedule_json(const nn::TrainSchedule& s) {
    return {{"epochs", s.epochs},
            {"batch_size", s.batch_size},
            {"lr", s.lr_initial},
            {"lr_drop_epoch", s.lr_drop_epoch},
            {"lr_drop_factor", s.lr_drop_factor}};
}

}  // namespace

Profile Profile::full() {
    Profile p;
    p.name = "full";
    p.dataset_size = 3000;
    p.train_size = 2000;
    p.cfm = cfm::CfmConfig{8, 500, nn::TrainSchedule{10000, 500, 1e-3, 5000, 0.1}};
    p.surrogate = surrogate::SurrogateConfig{6, 500, nn::TrainSchedule{500, 500, 1e-3, 250, 0.1}};
    p.integration_steps = 100;
    p.validity_tolerance = 0.02;
    p.augmentation_d_list = {100, 200, 300, 400, 500, 1000, 1500, 2000};
    p.augmentation_sizes = {10000, 100000};
    p.augmentation_seeds = 1;
    p.diversity_count = 1000;
    return p;
}

Profile Profile::desk() {
    Profile p;
    p.name = "desk";
    p.dataset_size = 700;
    p.train_size = 500;
    p.cfm = cfm::CfmConfig{4, 128, nn::TrainSchedule{2000, 500, 1e-3, 1000, 0.1}};
    p.surrogate = surrogate::SurrogateConfig{4, 64, nn::TrainSchedule{500, 500, 1e-3, 250, 0.1}};
    p.integration_steps = 100;
    p.validity_tolerance = 0.02;
    p.augmentation_d_list = {50, 100, 200};
    p.augmentation_sizes = {2000};
    p.augmentation_seeds = 3;
    p.diversity_count = 200;
    return p;
}

Profile Profile::named(std::string_view name) {
    if (name == "desk") return desk();
    if (name == "full") return full();
    throw DomainError("unknown profile '" + std::string(name) + "' (expected desk or full)");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    const auto lines = csv::lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = lines[i];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = csv::trim(line.substr(0, hash));
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", i + 1);
        const auto key = csv::trim(line.substr(0, eq));
        auto value = csv::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", i + 1);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (value.size() >= 2 && value.front() == '[' && value.back() == ']') value = value.substr(1, value.size() - 2);
        out[std::string(key)] = std::string(value);
    }
    return out;
}

void apply_overrides(Profile& p, const std::map<std::string, std::string>& overrides) {
    for (const auto& [key, value] : overrides) {
        const std::string_view k = key;
        if (k == "seed") {
            p.seed = parse_count(key, value);
        } else if (k == "dataset.size") {
            p.dataset_size = parse_count(key, value);
        } else if (k == "dataset.train_size") {
            p.train_size = parse_count(key, value);
        } else if (k == "cfm.hidden_layers") {
            p.cfm.hidden_layers = parse_count(key, value);
        } else if (k == "cfm.hidden_width") {
            p.cfm.hidden_width = parse_count(key, value);
        } else if (k.starts_with("cfm.")) {
            apply_schedule_key(p.cfm.schedule, key, k.substr(4), value);
        } else if (k == "surrogate.hidden_layers") {
            p.surrogate.hidden_layers = parse_count(key, value);
        } else if (k == "surrogate.hidden_width") {
            p.surrogate.hidden_width = parse_count(key, value);
        } else if (k.starts_with("surrogate.")) {
            apply_schedule_key(p.surrogate.schedule, key, k.substr(10), value);
        } else if (k == "generation.steps") {
            p.integration_steps = parse_count(key, value);
        } else if (k == "generation.tolerance") {
            p.validity_tolerance = parse_real(key, value);
        } else if (k == "augmentation.d_list") {
            p.augmentation_d_list = parse_counts(key, value);
        } else if (k == "augmentation.sizes") {
            p.augmentation_sizes = parse_counts(key, value);
        } else if (k == "augmentation.seeds") {
            p.augmentation_seeds = parse_count(key, value);
        } else if (k == "diversity.count") {
            p.diversity_count = parse_count(key, value);
        } else if (k == "diversity.eta_star") {
            p.diversity_target.eta_star = parse_real(key, value);
        } else if (k == "diversity.j_star") {
            p.diversity_target.j_star = parse_real(key, value);
        } else if (k == "diversity.kt_star") {
            p.diversity_target.kt_star = parse_real(key, value);
        } else {
            throw ParseError("unknown config key '" + key + "'");
        }
    }
    p.cfm.schedule.validate();
    p.surrogate.schedule.validate();
}

nlohmann::json to_json(const Profile& p) {
    return {{"name", p.name},
            {"seed", p.seed},
            {"dataset", {{"size", p.dataset_size}, {"train_size", p.train_size}}},
            {"cfm",
             {{"hidden_layers", p.cfm.hidden_layers},
              {"hidden_width", p.cfm.hidden_width},
              {"schedule", schedule_json(p.cfm.schedule)}}},
            {"surrogate",
             {{"hidden_layers", p.surrogate.hidden_layers},
              {"hidden_width", p.surrogate.hidden_width},
              {"schedule", schedule_json(p.surrogate.schedule)}}},
            {"generation", {{"steps", p.integration_steps}, {"tolerance", p.validity_tolerance}}},
            {"augmentation",
             {{"d_list", p.augmentation_d_list}, {"sizes", p.augmentation_sizes}, {"seeds", p.augmentation_seeds}}},
            {"diversity", {{"count", p.diversity_count}, {"target", hydro::to_json(p.diversity_target)}}}};
}

}  // namespace propforge

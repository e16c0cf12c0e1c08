#pragma once

// Named hyperparameter profiles. "full" is the full-scale setup, "desk"
// a reduced one that runs the whole pipeline on a laptop in minutes.
// Every knob is listed here; nothing downstream carries a hidden default.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "propforge/cfm.hpp"
#include "propforge/surrogate.hpp"

namespace propforge {

struct Profile final {
    std::string name;
    std::uint64_t seed = 7;

    std::size_t dataset_size = 3000;
    std::size_t train_size = 2000;

    cfm::CfmConfig cfm;
    surrogate::SurrogateConfig surrogate;
    std::size_t integration_steps = 100;

    double validity_tolerance = 0.02;

    std::vector<std::size_t> augmentation_d_list;
    std::vector<std::size_t> augmentation_sizes;
    std::size_t augmentation_seeds = 1;

    std::size_t diversity_count = 1000;
    hydro::LabelVector diversity_target{0.8, 1.0, 0.1};

    static Profile desk();
    static Profile full();
    // Throws DomainError for names other than "desk" and "full".
    static Profile named(std::string_view name);
};

// Parses "key = value" lines; '#' starts a comment, blank lines and
// [section] headers are skipped (section names are not prefixed).
// Throws ParseError with the line number on malformed input.
std::map<std::string, std::string> parse_key_values(std::string_view text);

// Applies overrides such as cfm.epochs = 200 or augmentation.d_list = 50,100.
// Throws ParseError naming an unknown key or a bad value.
void apply_overrides(Profile& profile, const std::map<std::string, std::string>& overrides);

nlohmann::json to_json(const Profile& p);

}  // namespace propforge

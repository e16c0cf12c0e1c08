#pragma once

// Blade geometry for the six-variable parametric propeller.
//
// The design vector sets the radial pitch and chord distributions through
// analytic single-peak shape functions. Camber is constant up to r/R = 0.9
// and tapers linearly to zero at the tip. Thickness is a fixed linear law
// and is only carried for export.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace propforge::geometry {

inline constexpr std::size_t kDesignDims = 6;
inline constexpr std::size_t kStationCount = 10;

// Normalized radii at which every blade is described.
inline constexpr std::array<double, kStationCount> kRadii = {0.2, 0.3, 0.4, 0.5, 0.6,
                                                             0.7, 0.8, 0.9, 0.95, 1.0};

struct DesignVector final {
    int n_blades = 4;
    double pitch_nominal = 1.0;  // P
    double w_rp = 0.7;           // radial position of max pitch
    double w_c = 0.75;           // max chord weight
    double w_rc = 0.65;          // radial position of max chord
    double camber = 0.02;        // f/c

    friend bool operator==(const DesignVector&, const DesignVector&) = default;
};

struct DesignRange final {
    std::string_view name;
    double lo;
    double hi;
};

// Admissible box for the design variables, in DesignVector field order.
// Column names match the dataset CSV header.
inline constexpr std::array<DesignRange, kDesignDims> kDesignRanges = {{
    {"n_blades", 2.0, 5.0},
    {"P", 0.5, 1.5},
    {"w_rp", 0.5, 0.9},
    {"w_c", 0.5, 1.0},
    {"w_rc", 0.5, 0.8},
    {"camber", 0.0, 0.05},
}};

// Throws DomainError naming the first field outside its range.
void validate(const DesignVector& p);
bool is_valid(const DesignVector& p) noexcept;

std::array<double, kDesignDims> to_array(const DesignVector& p);
// n_blades is taken as the rounded value; no range checks.
DesignVector from_array(const std::array<double, kDesignDims>& v);

struct SectionSpec final {
    double r_norm = 0.0;
    double pitch_ratio = 0.0;      // P/D
    double chord_ratio = 0.0;      // c/D
    double camber_ratio = 0.0;     // f/c
    double thickness_ratio = 0.0;  // t/D
};

struct BladeGeometry final {
    DesignVector design;
    std::vector<SectionSpec> sections;
};

// Normalized pitch shape, peak 1 at w_rp.
double pitch_shape(double r_norm, double w_rp);
// Normalized chord shape, peak 1 with zero slope at w_rc; 0.6 at the root
// and 0.08 at the tip.
double chord_shape(double r_norm, double w_rc);
double camber_at(double r_norm, double camber);
double thickness_at(double r_norm);

SectionSpec eval_distributions(const DesignVector& p, double r_norm);
BladeGeometry build_blade(const DesignVector& p);

// Flat station table: r_norm, pitch_ratio, chord_ratio, camber_ratio, thickness_ratio.
struct SectionTable final {
    static constexpr std::array<std::string_view, 5> kColumns = {
        "r_norm", "pitch_ratio", "chord_ratio", "camber_ratio", "thickness_ratio"};
    std::vector<std::array<double, 5>> rows;
};

SectionTable export_sections(const BladeGeometry& g);
std::string to_csv(const SectionTable& table);
SectionTable parse_section_csv(std::string_view text);
std::vector<SectionSpec> to_sections(const SectionTable& table);

nlohmann::json to_json(const SectionTable& table);
nlohmann::json to_json(const DesignVector& p);
// Expects the dataset column names as keys; throws ParseError naming a
// missing or non-numeric field and DomainError for out-of-range values.
DesignVector design_from_json(const nlohmann::json& j);

}  // namespace propforge::geometry

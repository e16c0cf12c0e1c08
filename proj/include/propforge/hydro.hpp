#pragma once

// Open-water performance of a blade described section by section.
//
// Each station is a blade element balanced against axial and angular
// momentum with Prandtl tip loss. Loads are nondimensional: u = J(1+a) and
// w = pi r (1-a') are velocities scaled by nD, dkt/dkq are the radial
// densities of kT and kQ over r/R.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "propforge/geometry.hpp"

namespace propforge::hydro {

struct OperatingGrid final {
    std::vector<double> advance_ratios;

    // J = 0.25, 0.30, ..., 1.60 (28 points).
    static OperatingGrid standard();
};

struct SolverSettings final {
    double drag_coefficient = 0.008;
    double relaxation = 0.3;
    double tolerance = 1e-6;
    int max_iterations = 500;
    double lift_limit = 1.5;
    double min_sin_phi = 1e-6;
    double min_tip_loss = 1e-3;
};

struct StationSolution final {
    double a = 0.0;      // axial induction
    double a_tan = 0.0;  // tangential induction
    double phi = 0.0;    // inflow angle [rad]
    double cl = 0.0;
    double dkt = 0.0;
    double dkq = 0.0;
    bool converged = false;
    int iterations = 0;
    // Set when the damped iteration stalled and the inflow-angle
    // bracketing solve produced the result.
    bool bracketed = false;
};

struct PointFlags final {
    int stations_converged = 0;
    int stations_bracketed = 0;
    bool all_converged() const noexcept {
        return stations_converged == static_cast<int>(geometry::kStationCount);
    }
};

struct OpenWaterCurve final {
    OperatingGrid grid;
    std::vector<double> kt;
    std::vector<double> kq;
    std::vector<PointFlags> station_flags;
};

struct LabelVector final {
    double eta_star = 0.0;
    double j_star = 0.0;
    double kt_star = 0.0;

    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

inline constexpr std::size_t kLabelDims = 3;
inline constexpr std::array<std::string_view, kLabelDims> kLabelNames = {"eta_star", "j_star",
                                                                           "kt_star"};

std::array<double, kLabelDims> to_array(const LabelVector& l);
LabelVector label_from_array(const std::array<double, kLabelDims>& v);
nlohmann::json to_json(const LabelVector& l);

// eta = J kT / (2 pi kQ). Throws DomainError when kq <= 0.
double efficiency(double j, double kt, double kq);

// Never throws on non-convergence; returns the last iterate with
// converged = false instead.
StationSolution solve_station(const geometry::SectionSpec& section, double j, int n_blades,
                              const SolverSettings& settings = {});

OpenWaterCurve open_water(const geometry::BladeGeometry& g,
                          const OperatingGrid& grid = OperatingGrid::standard(),
                          const SolverSettings& settings = {});

// Mesh step for the efficiency maximization.
inline constexpr double kLabelMeshStep = 0.001;

// Maximizes the piecewise-linear efficiency curve over the mesh points
// where kT > 0 and kQ > 0. Empty when there is no such point or the
// maximizer sits on the boundary of that range.
std::optional<LabelVector> extract_labels(const OpenWaterCurve& curve);
std::optional<LabelVector> extract_labels(const std::vector<double>& j_grid,
                                          const std::vector<double>& kt,
                                          const std::vector<double>& kq);

struct SimulationResult final {
    OpenWaterCurve curve;
    std::optional<LabelVector> labels;
};

// build_blade + open_water + extract_labels on the standard grid.
SimulationResult simulate(const geometry::DesignVector& p);

// Columns J,kT,kQ,eta; eta is "nan" where kQ <= 0.
std::string curve_to_csv(const OpenWaterCurve& curve);
nlohmann::json to_json(const SimulationResult& result);

}  // namespace propforge::hydro

#include "propforge/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "propforge/csv.hpp"
#include "propforge/error.hpp"

namespace propforge::hydro {

namespace {

using std::numbers::pi;

struct ElementLoads final {
    double phi;
    double cl;
    double dkt;
    double dkq;
    double tip_loss;
};

double lift_coefficient(const geometry::SectionSpec& s, double phi, const SolverSettings& cfg) {
    const double alpha = std::atan(s.pitch_ratio / (pi * s.r_norm)) - phi;
    // Parabolic mean line: zero-lift angle -2 f/c.
    const double cl = 2.0 * pi * (alpha + 2.0 * s.camber_ratio);
    return std::clamp(cl, -cfg.lift_limit, cfg.lift_limit);
}

double prandtl_tip_loss(double r_norm, double phi, int n_blades, const SolverSettings& cfg) {
    const double sin_phi = std::max(std::sin(phi), cfg.min_sin_phi);
    const double f = (2.0 / pi) *
                     std::acos(std::exp(-(n_blades / 2.0) * (1.0 - r_norm) / (r_norm * sin_phi)));
    return std::max(f, cfg.min_tip_loss);
}

ElementLoads blade_element(const geometry::SectionSpec& s, double j, int n_blades, double a,
                           double a_tan, const SolverSettings& cfg) {
    const double u = j * (1.0 + a);
    const double w = pi * s.r_norm * (1.0 - a_tan);
    const double w2 = u * u + w * w;
    const double phi = std::atan2(u, w);
    const double cl = lift_coefficient(s, phi, cfg);
    const double cd = cfg.drag_coefficient;
    const double c = std::cos(phi);
    const double sn = std::sin(phi);
    return ElementLoads{
        phi,
        cl,
        0.25 * n_blades * s.chord_ratio * w2 * (cl * c - cd * sn),
        0.125 * n_blades * s.chord_ratio * w2 * (cl * sn + cd * c) * s.r_norm,
        prandtl_tip_loss(s.r_norm, phi, n_blades, cfg),
    };
}

constexpr double kInductionLo = -0.45;
constexpr double kInductionHi = 0.95;

// Damped fixed point on (a, a'). Each sweep inverts the momentum relations
// for the blade-element loads at the current iterate.
StationSolution damped_iteration(const geometry::SectionSpec& s, double j, int n_blades,
                                 const SolverSettings& cfg, bool& clamp_active) {
    const double r = s.r_norm;
    double a = 0.0;
    double a_tan = 0.0;
    StationSolution out;
    clamp_active = false;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const auto e = blade_element(s, j, n_blades, a, a_tan, cfg);
        const double axial_mass = pi * j * j * r * (1.0 + a) * e.tip_loss;
        const double swirl_mass = 0.5 * pi * pi * j * r * r * r * (1.0 + a) * e.tip_loss;
        const double a_raw = e.dkt / axial_mass;
        const double a_tan_raw = e.dkq / swirl_mass;
        const double a_target = std::clamp(a_raw, kInductionLo, kInductionHi);
        const double a_tan_target = std::clamp(a_tan_raw, kInductionLo, kInductionHi);
        const double next_a = a + cfg.relaxation * (a_target - a);
        const double next_a_tan = a_tan + cfg.relaxation * (a_tan_target - a_tan);
        const double step = std::max(std::abs(next_a - a), std::abs(next_a_tan - a_tan));
        a = next_a;
        a_tan = next_a_tan;
        out.iterations = it;
        if (!std::isfinite(step)) break;
        if (step < cfg.tolerance) {
            out.converged = true;
            clamp_active = a_raw != a_target || a_tan_raw != a_tan_target;
            break;
        }
    }
    const auto e = blade_element(s, j, n_blades, a, a_tan, cfg);
    out.a = a;
    out.a_tan = a_tan;
    out.phi = e.phi;
    out.cl = e.cl;
    out.dkt = e.dkt;
    out.dkq = e.dkq;
    return out;
}

// Inflow-angle formulation: for a given phi the torque balance fixes the
// relative speed W, leaving a scalar thrust residual in phi that is
// bracketed and bisected.
struct PhiState final {
    double residual;
    double w_rel;
    double cl;
    double cn;
    double ct;
};

PhiState phi_state(const geometry::SectionSpec& s, double j, int n_blades, double phi,
                   const SolverSettings& cfg) {
    const double r = s.r_norm;
    const double c = s.chord_ratio;
    const double cl = lift_coefficient(s, phi, cfg);
    const double sn = std::sin(phi);
    const double cs = std::cos(phi);
    const double cn = cl * cs - cfg.drag_coefficient * sn;
    const double ct = cl * sn + cfg.drag_coefficient * cs;
    const double f = prandtl_tip_loss(r, phi, n_blades, cfg);
    const double denom = 0.125 * n_blades * c * ct + 0.5 * f * pi * r * sn * cs;
    const double w_rel = 0.5 * f * pi * pi * r * r * sn / denom;
    if (!(denom > 0.0) || !std::isfinite(w_rel)) {
        return {std::nan(""), w_rel, cl, cn, ct};
    }
    const double residual = 0.25 * n_blades * c * cn - pi * r * f * sn * (sn - j / w_rel);
    return {residual, w_rel, cl, cn, ct};
}

std::optional<StationSolution> bracketed_solve(const geometry::SectionSpec& s, double j,
                                               int n_blades, const SolverSettings& cfg) {
    constexpr int kScan = 200;
    constexpr int kBisect = 100;
    const double lo_bound = 1e-6;
    const double hi_bound = pi / 2.0 - 1e-6;
    double lo = lo_bound;
    double f_lo = phi_state(s, j, n_blades, lo, cfg).residual;
    bool found = false;
    double hi = lo;
    for (int k = 1; k <= kScan; ++k) {
        hi = lo_bound + (hi_bound - lo_bound) * k / kScan;
        const double f_hi = phi_state(s, j, n_blades, hi, cfg).residual;
        if (std::isfinite(f_lo) && std::isfinite(f_hi) && f_lo * f_hi <= 0.0) {
            found = true;
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    if (!found) return std::nullopt;
    for (int k = 0; k < kBisect; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = phi_state(s, j, n_blades, mid, cfg).residual;
        if (!std::isfinite(f_mid)) return std::nullopt;
        if (f_lo * f_mid <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    const double phi = 0.5 * (lo + hi);
    const auto st = phi_state(s, j, n_blades, phi, cfg);
    const double w2 = st.w_rel * st.w_rel;
    StationSolution out;
    out.phi = phi;
    out.cl = st.cl;
    out.a = st.w_rel * std::sin(phi) / j - 1.0;
    out.a_tan = 1.0 - st.w_rel * std::cos(phi) / (pi * s.r_norm);
    out.dkt = 0.25 * n_blades * s.chord_ratio * w2 * st.cn;
    out.dkq = 0.125 * n_blades * s.chord_ratio * w2 * st.ct * s.r_norm;
    out.converged = true;
    out.bracketed = true;
    out.iterations = kScan + kBisect;
    return out;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) sum += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
    return sum;
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
    auto it = std::upper_bound(x.begin(), x.end(), at);
    std::size_t hi = static_cast<std::size_t>(it - x.begin());
    hi = std::clamp<std::size_t>(hi, 1, x.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (at - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
}

}  // namespace

OperatingGrid OperatingGrid::standard() {
    OperatingGrid grid;
    for (int k = 5; k <= 32; ++k) grid.advance_ratios.push_back(k * 0.05);
    return grid;
}

std::array<double, kLabelDims> to_array(const LabelVector& l) {
    return {l.eta_star, l.j_star, l.kt_star};
}

LabelVector label_from_array(const std::array<double, kLabelDims>& v) { return {v[0], v[1], v[2]}; }

nlohmann::json to_json(const LabelVector& l) {
    return {{"eta_star", l.eta_star}, {"j_star", l.j_star}, {"kt_star", l.kt_star}};
}

double efficiency(double j, double kt, double kq) {
    if (!(kq > 0.0)) throw DomainError("efficiency: kq must be positive, got " + csv::format_number(kq));
    return j * kt / (2.0 * pi * kq);
}

StationSolution solve_station(const geometry::SectionSpec& section, double j, int n_blades,
                              const SolverSettings& settings) {
    if (!(j > 0.0)) throw DomainError("advance ratio must be positive, got " + csv::format_number(j));
    if (section.chord_ratio < 0.0) throw DomainError("chord_ratio must be non-negative");
    if (section.chord_ratio == 0.0) {
        StationSolution bare;
        bare.phi = std::atan2(j, pi * section.r_norm);
        bare.cl = lift_coefficient(section, bare.phi, settings);
        bare.converged = true;
        return bare;
    }
    bool clamp_active = false;
    auto fixed_point = damped_iteration(section, j, n_blades, settings, clamp_active);
    if (fixed_point.converged && !clamp_active) return fixed_point;
    if (auto bracketed = bracketed_solve(section, j, n_blades, settings)) return *bracketed;
    fixed_point.converged = false;
    return fixed_point;
}

OpenWaterCurve open_water(const geometry::BladeGeometry& g, const OperatingGrid& grid,
                          const SolverSettings& settings) {
    OpenWaterCurve curve;
    curve.grid = grid;
    std::vector<double> radii;
    for (const auto& s : g.sections) radii.push_back(s.r_norm);
    std::vector<double> dkt(g.sections.size());
    std::vector<double> dkq(g.sections.size());
    for (double j : grid.advance_ratios) {
        PointFlags flags;
        for (std::size_t i = 0; i < g.sections.size(); ++i) {
            const auto st = solve_station(g.sections[i], j, g.design.n_blades, settings);
            dkt[i] = st.dkt;
            dkq[i] = st.dkq;
            flags.stations_converged += st.converged ? 1 : 0;
            flags.stations_bracketed += st.bracketed ? 1 : 0;
        }
        curve.kt.push_back(trapezoid(radii, dkt));
        curve.kq.push_back(trapezoid(radii, dkq));
        curve.station_flags.push_back(flags);
    }
    return curve;
}

std::optional<LabelVector> extract_labels(const std::vector<double>& j_grid,
                                          const std::vector<double>& kt,
                                          const std::vector<double>& kq) {
    if (j_grid.size() < 2 || kt.size() != j_grid.size() || kq.size() != j_grid.size()) {
        throw DomainError("extract_labels: curve arrays incomplete");
    }
    const double j0 = j_grid.front();
    const auto mesh_points =
        static_cast<long>(std::lround((j_grid.back() - j0) / kLabelMeshStep));
    long best = -1;
    double best_eta = -1.0;
    double best_kt = 0.0;
    std::vector<char> positive(static_cast<std::size_t>(mesh_points + 1), 0);
    for (long k = 0; k <= mesh_points; ++k) {
        const double j = j0 + k * kLabelMeshStep;
        const double t = interpolate(j_grid, kt, j);
        const double q = interpolate(j_grid, kq, j);
        if (!(t > 0.0 && q > 0.0)) continue;
        positive[static_cast<std::size_t>(k)] = 1;
        const double eta = j * t / (2.0 * pi * q);
        if (eta > best_eta) {
            best_eta = eta;
            best = k;
            best_kt = t;
        }
    }
    if (best < 0) return std::nullopt;
    const bool on_boundary = best == 0 || best == mesh_points ||
                             !positive[static_cast<std::size_t>(best - 1)] ||
                             !positive[static_cast<std::size_t>(best + 1)];
    if (on_boundary) return std::nullopt;
    return LabelVector{best_eta, j0 + best * kLabelMeshStep, best_kt};
}

std::optional<LabelVector> extract_labels(const OpenWaterCurve& curve) {
    return extract_labels(curve.grid.advance_ratios, curve.kt, curve.kq);
}

SimulationResult simulate(const geometry::DesignVector& p) {
    SimulationResult result;
    result.curve = open_water(geometry::build_blade(p));
    result.labels = extract_labels(result.curve);
    return result;
}

std::string curve_to_csv(const OpenWaterCurve& curve) {
    std::string out = "J,kT,kQ,eta\n";
    for (std::size_t i = 0; i < curve.kt.size(); ++i) {
        const double j = curve.grid.advance_ratios[i];
        const double eta = curve.kq[i] > 0.0 ? efficiency(j, curve.kt[i], curve.kq[i]) : std::nan("");
        out += csv::format_number(j) + ',' + csv::format_number(curve.kt[i]) + ',' +
               csv::format_number(curve.kq[i]) + ',' + csv::format_number(eta) + '\n';
    }
    return out;
}

nlohmann::json to_json(const SimulationResult& result) {
    nlohmann::json curve;
    curve["J"] = result.curve.grid.advance_ratios;
    curve["kT"] = result.curve.kt;
    curve["kQ"] = result.curve.kq;
    auto eta = nlohmann::json::array();
    auto converged = nlohmann::json::array();
    for (std::size_t i = 0; i < result.curve.kt.size(); ++i) {
        if (result.curve.kq[i] > 0.0) {
            eta.push_back(efficiency(result.curve.grid.advance_ratios[i], result.curve.kt[i],
                                     result.curve.kq[i]));
        } else {
            eta.push_back(nullptr);
        }
        converged.push_back(result.curve.station_flags[i].stations_converged);
    }
    curve["eta"] = eta;
    curve["stations_converged"] = converged;
    nlohmann::json out;
    out["curve"] = curve;
    if (result.labels) {
        out["labels"] = to_json(*result.labels);
        out["labels"]["valid"] = true;
    } else {
        out["labels"] = {{"valid", false}, {"reason", "no interior efficiency maximum"}};
    }
    return out;
}

}  // namespace propforge::hydro

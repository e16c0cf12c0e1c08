#include "propforge/geometry.hpp"

#include <cmath>
#include <sstream>

#include "propforge/csv.hpp"
#include "propforge/error.hpp"

namespace propforge::geometry {

namespace {

constexpr double kRootRadius = 0.2;
constexpr double kTipRadius = 1.0;
constexpr double kPitchFalloff = 0.2;
constexpr double kPitchSpan = 0.8;
constexpr double kChordRootValue = 0.6;
constexpr double kChordTipValue = 0.08;
constexpr double kChordScale = 0.35;
constexpr double kCamberTaperStart = 0.9;
constexpr double kThicknessRoot = 0.035;
constexpr double kThicknessTip = 0.003;

std::string range_message(const DesignRange& range, double value) {
    std::ostringstream os;
    os << range.name << " = " << value << " outside [" << range.lo << ", " << range.hi << "]";
    return os.str();
}

void check_radius(double r_norm) {
    if (!(r_norm >= kRootRadius && r_norm <= kTipRadius)) {
        std::ostringstream os;
        os << "r_norm = " << r_norm << " outside [0.2, 1]";
        throw DomainError(os.str());
    }
}

}  // namespace

void validate(const DesignVector& p) {
    const auto values = to_array(p);
    for (std::size_t i = 0; i < kDesignDims; ++i) {
        const auto& range = kDesignRanges[i];
        if (!(values[i] >= range.lo && values[i] <= range.hi)) {
            throw DomainError(range_message(range, values[i]));
        }
    }
}

bool is_valid(const DesignVector& p) noexcept {
    try {
        validate(p);
        return true;
    } catch (const DomainError&) {
        return false;
    }
}

std::array<double, kDesignDims> to_array(const DesignVector& p) {
    return {static_cast<double>(p.n_blades), p.pitch_nominal, p.w_rp, p.w_c, p.w_rc, p.camber};
}

DesignVector from_array(const std::array<double, kDesignDims>& v) {
    return DesignVector{static_cast<int>(std::lround(v[0])), v[1], v[2], v[3], v[4], v[5]};
}

double pitch_shape(double r_norm, double w_rp) {
    const double x = (r_norm - w_rp) / kPitchSpan;
    return 1.0 - kPitchFalloff * x * x;
}

double chord_shape(double r_norm, double w_rc) {
    const bool inboard = r_norm <= w_rc;
    const double end_value = inboard ? kChordRootValue : kChordTipValue;
    const double end_radius = inboard ? kRootRadius : kTipRadius;
    const double x = (r_norm - w_rc) / (end_radius - w_rc);
    return 1.0 - (1.0 - end_value) * x * x;
}

double camber_at(double r_norm, double camber) {
    if (r_norm <= kCamberTaperStart) return camber;
    return camber * (kTipRadius - r_norm) / (kTipRadius - kCamberTaperStart);
}

double thickness_at(double r_norm) {
    const double s = (r_norm - kRootRadius) / (kTipRadius - kRootRadius);
    return kThicknessRoot + (kThicknessTip - kThicknessRoot) * s;
}

SectionSpec eval_distributions(const DesignVector& p, double r_norm) {
    check_radius(r_norm);
    validate(p);
    return SectionSpec{
        r_norm,
        p.pitch_nominal * pitch_shape(r_norm, p.w_rp),
        kChordScale * p.w_c * chord_shape(r_norm, p.w_rc),
        camber_at(r_norm, p.camber),
        thickness_at(r_norm),
    };
}

BladeGeometry build_blade(const DesignVector& p) {
    BladeGeometry g{p, {}};
    g.sections.reserve(kStationCount);
    for (double r : kRadii) g.sections.push_back(eval_distributions(p, r));
    return g;
}

SectionTable export_sections(const BladeGeometry& g) {
    if (g.sections.empty()) throw ValidationError("geometry has no sections");
    SectionTable table;
    table.rows.reserve(g.sections.size());
    double previous = -1.0;
    for (const auto& s : g.sections) {
        if (!(s.r_norm > previous)) throw ValidationError("sections not strictly increasing in r_norm");
        previous = s.r_norm;
        table.rows.push_back({s.r_norm, s.pitch_ratio, s.chord_ratio, s.camber_ratio, s.thickness_ratio});
    }
    return table;
}

std::string to_csv(const SectionTable& table) {
    std::string out;
    for (std::size_t c = 0; c < SectionTable::kColumns.size(); ++c) {
        if (c) out += ',';
        out += SectionTable::kColumns[c];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += csv::format_number(row[c]);
        }
        out += '\n';
    }
    return out;
}

SectionTable parse_section_csv(std::string_view text) {
    const auto lines = csv::lines(text);
    if (lines.empty()) throw ParseError("empty section table");
    const auto header = csv::split_row(lines[0]);
    if (header.size() != SectionTable::kColumns.size()) {
        throw ParseError("expected 5 columns in header", 1);
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (csv::trim(header[c]) != SectionTable::kColumns[c]) {
            throw ParseError("header column " + std::to_string(c + 1) + " must be '" +
                                 std::string(SectionTable::kColumns[c]) + "'",
                             1);
        }
    }
    SectionTable table;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = csv::split_row(lines[i]);
        if (fields.size() != 5) throw ParseError("expected 5 fields", i + 1);
        std::array<double, 5> row{};
        for (std::size_t c = 0; c < 5; ++c) {
            row[c] = csv::parse_number(fields[c], i + 1, SectionTable::kColumns[c]);
        }
        table.rows.push_back(row);
    }
    return table;
}

std::vector<SectionSpec> to_sections(const SectionTable& table) {
    std::vector<SectionSpec> out;
    out.reserve(table.rows.size());
    for (const auto& r : table.rows) out.push_back({r[0], r[1], r[2], r[3], r[4]});
    return out;
}

nlohmann::json to_json(const SectionTable& table) {
    auto rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        nlohmann::json row;
        for (std::size_t c = 0; c < r.size(); ++c) row[std::string(SectionTable::kColumns[c])] = r[c];
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json(const DesignVector& p) {
    return {
        {"n_blades", p.n_blades}, {"P", p.pitch_nominal}, {"w_rp", p.w_rp},
        {"w_c", p.w_c},           {"w_rc", p.w_rc},       {"camber", p.camber},
    };
}

DesignVector design_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("design must be a JSON object");
    std::array<double, kDesignDims> values{};
    for (std::size_t i = 0; i < kDesignDims; ++i) {
        const std::string key(kDesignRanges[i].name);
        const auto it = j.find(key);
        if (it == j.end()) throw ParseError("missing design field '" + key + "'");
        if (!it->is_number()) throw ParseError("design field '" + key + "' must be a number");
        values[i] = it->get<double>();
    }
    if (values[0] != std::floor(values[0])) {
        throw DomainError("n_blades = " + csv::format_number(values[0]) + " is not an integer");
    }
    auto p = from_array(values);
    validate(p);
    return p;
}

}  // namespace propforge::geometry

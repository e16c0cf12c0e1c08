#include "propforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "propforge/csv.hpp"
#include "propforge/error.hpp"
#include "propforge/parallel.hpp"

namespace propforge::data {

namespace {

constexpr std::uint64_t kRoundSalt = 0x9E3779B97F4A7C15ULL;

constexpr std::array<std::string_view, 11> kColumns = {
    "n_blades", "P", "w_rp", "w_c", "w_rc", "camber", "eta_star", "j_star", "kt_star", "provenance", "seed"};

double stratum_value(std::size_t stratum, double jitter, std::size_t n, double lo, double hi) {
    const double u = (static_cast<double>(stratum) + jitter) / static_cast<double>(n);
    return std::min(hi, lo + (hi - lo) * u);
}

template <std::size_t N>
void check_std(const std::array<double, N>& sd, std::size_t offset) {
    for (std::size_t i = 0; i < N; ++i) {
        if (!(sd[i] > 0.0)) {
            throw DomainError("zero variance in dimension '" + std::string(kColumns[offset + i]) + "'");
        }
    }
}

}  // namespace

std::string_view to_string(Provenance p) { return p == Provenance::simulated ? "simulated" : "pseudo"; }

std::vector<DesignVector> lhs_sample(std::size_t n, std::uint64_t seed) {
    std::vector<DesignVector> out(n);
    if (n == 0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t dim = 0; dim < geometry::kDesignDims; ++dim) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = jitter(rng);
            if (dim == 0) {
                const double axis = stratum_value(perm[i], u, n, 0.0, 4.0);
                out[i].n_blades = 2 + std::min(3, static_cast<int>(std::floor(axis)));
                continue;
            }
            const auto& range = geometry::kDesignRanges[dim];
            const double v = stratum_value(perm[i], u, n, range.lo, range.hi);
            switch (dim) {
                case 1: out[i].pitch_nominal = v; break;
                case 2: out[i].w_rp = v; break;
                case 3: out[i].w_c = v; break;
                case 4: out[i].w_rc = v; break;
                default: out[i].camber = v; break;
            }
        }
    }
    return out;
}

LabeledDataset generate_dataset(std::size_t n, std::uint64_t seed, const WarningSink& warn,
                                const ProgressSink& progress) {
    if (n == 0) throw DomainError("generate_dataset: n must be at least 1");
    LabeledDataset d;
    d.seed = seed;
    const std::size_t cap = 2 * n;
    std::size_t attempts = 0;
    for (std::uint64_t round = 0; d.records.size() < n && attempts < cap; ++round) {
        const std::size_t want = std::min(n - d.records.size(), cap - attempts);
        const auto designs = lhs_sample(want, seed ^ (round * kRoundSalt));
        std::vector<std::optional<LabelVector>> labels(want);
        parallel_for(want, [&](std::size_t i) { labels[i] = hydro::simulate(designs[i]).labels; });
        attempts += want;
        for (std::size_t i = 0; i < want; ++i) {
            if (labels[i]) d.records.push_back({designs[i], *labels[i], Provenance::simulated});
        }
        if (progress) progress(d.records.size(), n);
    }
    if (d.records.size() < n && warn) {
        warn("generate_dataset: only " + std::to_string(d.records.size()) + " of " + std::to_string(n) +
             " valid records after " + std::to_string(attempts) + " simulations");
    }
    return d;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& d, std::size_t n_train) {
    if (n_train == 0 || n_train >= d.size()) {
        throw DomainError("split: n_train = " + std::to_string(n_train) + " must be in [1, " +
                          std::to_string(d.size()) + ")");
    }
    LabeledDataset train{{d.records.begin(), d.records.begin() + static_cast<long>(n_train)}, d.norm, d.seed};
    LabeledDataset test{{d.records.begin() + static_cast<long>(n_train), d.records.end()}, d.norm, d.seed};
    return {std::move(train), std::move(test)};
}

LabeledDataset take(const LabeledDataset& d, std::size_t n) {
    if (n > d.size()) throw DomainError("take: requested " + std::to_string(n) + " of " + std::to_string(d.size()));
    return LabeledDataset{{d.records.begin(), d.records.begin() + static_cast<long>(n)}, d.norm, d.seed};
}

LabeledDataset shuffled(const LabeledDataset& d, std::uint64_t seed) {
    LabeledDataset out = d;
    std::mt19937_64 rng(seed);
    std::shuffle(out.records.begin(), out.records.end(), rng);
    return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
    LabeledDataset out = a;
    out.records.insert(out.records.end(), b.records.begin(), b.records.end());
    out.norm.reset();
    return out;
}

NormStats fit_norm(const LabeledDataset& train) {
    if (train.records.empty()) throw DomainError("fit_norm: empty training set");
    NormStats s;
    const double n = static_cast<double>(train.size());
    for (const auto& r : train.records) {
        const auto x = geometry::to_array(r.design);
        const auto l = hydro::to_array(r.labels);
        for (std::size_t i = 0; i < x.size(); ++i) s.design_mean[i] += x[i] / n;
        for (std::size_t i = 0; i < l.size(); ++i) s.label_mean[i] += l[i] / n;
    }
    for (const auto& r : train.records) {
        const auto x = geometry::to_array(r.design);
        const auto l = hydro::to_array(r.labels);
        for (std::size_t i = 0; i < x.size(); ++i) s.design_std[i] += (x[i] - s.design_mean[i]) * (x[i] - s.design_mean[i]) / n;
        for (std::size_t i = 0; i < l.size(); ++i) s.label_std[i] += (l[i] - s.label_mean[i]) * (l[i] - s.label_mean[i]) / n;
    }
    for (auto& v : s.design_std) v = std::sqrt(v);
    for (auto& v : s.label_std) v = std::sqrt(v);
    // Relative floor so rounding noise on a constant column still counts as zero variance.
    for (std::size_t i = 0; i < s.design_std.size(); ++i) {
        if (s.design_std[i] <= 1e-12 * std::max(1.0, std::abs(s.design_mean[i]))) s.design_std[i] = 0.0;
    }
    for (std::size_t i = 0; i < s.label_std.size(); ++i) {
        if (s.label_std[i] <= 1e-12 * std::max(1.0, std::abs(s.label_mean[i]))) s.label_std[i] = 0.0;
    }
    check_std(s.design_std, 0);
    check_std(s.label_std, geometry::kDesignDims);
    return s;
}

std::array<double, geometry::kDesignDims> normalize_design(const std::array<double, geometry::kDesignDims>& x,
                                                           const NormStats& s) {
    std::array<double, geometry::kDesignDims> z{};
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (x[i] - s.design_mean[i]) / s.design_std[i];
    return z;
}

std::array<double, geometry::kDesignDims> apply_norm(const DesignVector& p, const NormStats& s) {
    return normalize_design(geometry::to_array(p), s);
}

std::array<double, geometry::kDesignDims> invert_design(const std::array<double, geometry::kDesignDims>& z,
                                                        const NormStats& s) {
    std::array<double, geometry::kDesignDims> x{};
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] * s.design_std[i] + s.design_mean[i];
    return x;
}

std::array<double, hydro::kLabelDims> normalize_labels(const std::array<double, hydro::kLabelDims>& x,
                                                       const NormStats& s) {
    std::array<double, hydro::kLabelDims> z{};
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (x[i] - s.label_mean[i]) / s.label_std[i];
    return z;
}

std::array<double, hydro::kLabelDims> apply_norm(const LabelVector& l, const NormStats& s) {
    return normalize_labels(hydro::to_array(l), s);
}

std::array<double, hydro::kLabelDims> invert_labels(const std::array<double, hydro::kLabelDims>& z,
                                                    const NormStats& s) {
    std::array<double, hydro::kLabelDims> x{};
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = z[i] * s.label_std[i] + s.label_mean[i];
    return x;
}

nlohmann::json to_json(const NormStats& s) {
    return {{"design_mean", s.design_mean},
            {"design_std", s.design_std},
            {"label_mean", s.label_mean},
            {"label_std", s.label_std}};
}

NormStats norm_from_json(const nlohmann::json& j) {
    NormStats s;
    try {
        s.design_mean = j.at("design_mean").get<std::array<double, geometry::kDesignDims>>();
        s.design_std = j.at("design_std").get<std::array<double, geometry::kDesignDims>>();
        s.label_mean = j.at("label_mean").get<std::array<double, hydro::kLabelDims>>();
        s.label_std = j.at("label_std").get<std::array<double, hydro::kLabelDims>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("normalization stats: ") + e.what());
    }
    check_std(s.design_std, 0);
    check_std(s.label_std, geometry::kDesignDims);
    return s;
}

void validate_labels(const LabelVector& l) {
    const auto grid = hydro::OperatingGrid::standard().advance_ratios;
    if (!(l.eta_star > 0.0 && l.eta_star < 1.0)) {
        throw ValidationError("eta_star = " + csv::format_number(l.eta_star) + " outside (0, 1)");
    }
    if (!(l.j_star > grid.front() && l.j_star < grid.back())) {
        throw ValidationError("j_star = " + csv::format_number(l.j_star) + " outside the operating grid interior");
    }
    if (!(l.kt_star > 0.0)) {
        throw ValidationError("kt_star = " + csv::format_number(l.kt_star) + " must be positive");
    }
}

std::string to_csv(const LabeledDataset& d) {
    std::string out(kDatasetHeader);
    out += '\n';
    const std::string seed = std::to_string(d.seed);
    for (const auto& r : d.records) {
        out += std::to_string(r.design.n_blades);
        for (double v : {r.design.pitch_nominal, r.design.w_rp, r.design.w_c, r.design.w_rc, r.design.camber,
                         r.labels.eta_star, r.labels.j_star, r.labels.kt_star}) {
            out += ',';
            out += csv::format_number(v);
        }
        out += ',';
        out += to_string(r.provenance);
        out += ',';
        out += seed;
        out += '\n';
    }
    return out;
}

LabeledDataset parse_dataset_csv(std::string_view text) {
    const auto lines = csv::lines(text);
    if (lines.empty()) throw ParseError("empty dataset file", 1);
    const auto header = csv::split_row(lines[0]);
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
        if (c >= header.size()) throw ParseError("missing header column '" + std::string(kColumns[c]) + "'", 1);
        if (csv::trim(header[c]) != kColumns[c]) {
            throw ParseError("header column " + std::to_string(c + 1) + " must be '" + std::string(kColumns[c]) + "'", 1);
        }
    }
    if (header.size() != kColumns.size()) throw ParseError("unexpected extra header columns", 1);

    LabeledDataset d;
    bool seed_seen = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::size_t line_no = i + 1;
        const auto f = csv::split_row(lines[i]);
        if (f.size() != kColumns.size()) {
            throw ParseError("expected " + std::to_string(kColumns.size()) + " fields, got " + std::to_string(f.size()),
                             line_no);
        }
        std::array<double, 9> v{};
        for (std::size_t c = 0; c < v.size(); ++c) v[c] = csv::parse_number(f[c], line_no, kColumns[c]);
        LabeledRecord r;
        if (v[0] != std::floor(v[0])) throw ParseError("n_blades must be an integer", line_no);
        r.design = geometry::from_array({v[0], v[1], v[2], v[3], v[4], v[5]});
        r.labels = {v[6], v[7], v[8]};
        const auto prov = csv::trim(f[9]);
        if (prov == "simulated") {
            r.provenance = Provenance::simulated;
        } else if (prov == "pseudo") {
            r.provenance = Provenance::pseudo;
        } else {
            throw ParseError("provenance must be 'simulated' or 'pseudo'", line_no);
        }
        std::uint64_t seed = 0;
        const auto seed_text = csv::trim(f[10]);
        auto res = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), seed);
        if (res.ec != std::errc{} || res.ptr != seed_text.data() + seed_text.size()) {
            throw ParseError("seed must be an unsigned integer", line_no);
        }
        if (seed_seen && seed != d.seed) throw ParseError("seed differs from earlier rows", line_no);
        d.seed = seed;
        seed_seen = true;
        try {
            geometry::validate(r.design);
            validate_labels(r.labels);
        } catch (const std::exception& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what() + " (design ranges: n_blades in {2,3,4,5}, P in [0.5,1.5], w_rp in [0.5,0.9], w_c in [0.5,1], w_rc in [0.5,0.8], camber in [0,0.05])");
        }
        d.records.push_back(r);
    }
    return d;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void save_dataset(const LabeledDataset& d, const std::filesystem::path& path) { write_text_file(path, to_csv(d)); }

LabeledDataset load_dataset(const std::filesystem::path& path) { return parse_dataset_csv(read_text_file(path)); }

std::vector<std::array<double, geometry::kDesignDims>> design_rows(const LabeledDataset& d) {
    std::vector<std::array<double, geometry::kDesignDims>> out;
    out.reserve(d.size());
    for (const auto& r : d.records) out.push_back(geometry::to_array(r.design));
    return out;
}

std::vector<std::array<double, hydro::kLabelDims>> label_rows(const LabeledDataset& d) {
    std::vector<std::array<double, hydro::kLabelDims>> out;
    out.reserve(d.size());
    for (const auto& r : d.records) out.push_back(hydro::to_array(r.labels));
    return out;
}

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("PROPFORGE_DATA_DIR"); env && *env) return env;
    return "propforge-data";
}

}  // namespace propforge::data

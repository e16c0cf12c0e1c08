#include "propforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "propforge/csv.hpp"
#include "propforge/error.hpp"
#include "propforge/parallel.hpp"
#include "propforge/plot.hpp"

namespace propforge::eval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kHistogramBins = 20;

std::vector<std::optional<hydro::LabelVector>> simulate_all(const std::vector<geometry::DesignVector>& designs) {
    std::vector<std::optional<hydro::LabelVector>> out(designs.size());
    parallel_for(designs.size(), [&](std::size_t i) { out[i] = hydro::simulate(designs[i]).labels; });
    return out;
}

void fill_histograms(StudyReport& r) {
    for (std::size_t k = 0; k < geometry::kDesignDims; ++k) {
        std::vector<double> values;
        values.reserve(r.designs.size());
        for (const auto& d : r.designs) values.push_back(geometry::to_array(d)[k]);
        const auto& range = geometry::kDesignRanges[k];
        // n_blades gets one bin per integer value.
        const std::size_t bins = k == 0 ? 4 : kHistogramBins;
        const double lo = k == 0 ? 1.5 : range.lo;
        const double hi = k == 0 ? 5.5 : range.hi;
        r.design_histograms.push_back(Histogram::of(std::string(range.name), values, bins, lo, hi));
    }
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        std::vector<double> values;
        for (const auto& a : r.achieved) {
            if (a) values.push_back(hydro::to_array(*a)[k]);
        }
        if (values.empty()) {
            r.label_histograms.push_back(Histogram::of(std::string(hydro::kLabelNames[k]), values, kHistogramBins, 0, 1));
            continue;
        }
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        const double pad = std::max(1e-9, 0.05 * (*mx - *mn));
        r.label_histograms.push_back(
            Histogram::of(std::string(hydro::kLabelNames[k]), values, kHistogramBins, *mn - pad, *mx + pad));
    }
}

void compute_mre(StudyReport& r) {
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        const auto& pairs = r.parity[k];
        if (pairs.empty()) {
            r.mre[k] = kNaN;
            continue;
        }
        std::vector<double> t, a;
        for (const auto& p : pairs) {
            t.push_back(p[0]);
            a.push_back(p[1]);
        }
        r.mre[k] = surrogate::mre(t, a);
    }
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

bool labels_ok(const hydro::LabelVector& l) {
    try {
        data::validate_labels(l);
        return true;
    } catch (const ValidationError&) {
        return false;
    }
}

}  // namespace

Histogram Histogram::of(std::string name, const std::vector<double>& values, std::size_t bins, double lo, double hi) {
    if (bins == 0 || !(hi > lo)) throw DomainError("histogram needs bins > 0 and hi > lo");
    Histogram h{std::move(name), lo, hi, std::vector<std::size_t>(bins, 0)};
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        const double pos = std::floor((v - lo) / width);
        const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
        ++h.counts[idx];
    }
    return h;
}

StudyReport run_accuracy_study(const cfm::CfmModel& model, const data::LabeledDataset& test, std::size_t steps,
                               std::uint64_t seed) {
    if (test.records.empty()) throw DomainError("accuracy study: empty test set");
    std::vector<hydro::LabelVector> conditions;
    conditions.reserve(test.size());
    for (const auto& r : test.records) conditions.push_back(r.labels);

    StudyReport r;
    r.study = "accuracy";
    r.requested = conditions.size();
    r.seed = seed;
    r.steps = steps;
    r.within_tolerance.fill(kNaN);
    const auto gen = cfm::sample_for_labels(model, conditions, steps, seed);
    r.designs = gen.designs;
    r.achieved = simulate_all(r.designs);
    for (std::size_t i = 0; i < r.achieved.size(); ++i) {
        if (!r.achieved[i]) continue;
        ++r.valid;
        const auto want = hydro::to_array(conditions[i]);
        const auto got = hydro::to_array(*r.achieved[i]);
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) r.parity[k].push_back({want[k], got[k]});
    }
    compute_mre(r);
    fill_histograms(r);
    r.config = {{"test_size", test.size()}, {"steps", steps}, {"seed", seed}};
    return r;
}

StudyReport run_diversity_study(const cfm::CfmModel& model, const cfm::TargetSpec& spec, std::size_t n,
                                std::size_t steps, std::uint64_t seed, double tolerance) {
    spec.validate();
    if (n == 0) throw DomainError("diversity study: n must be positive");
    StudyReport r;
    r.study = "diversity";
    r.requested = n;
    r.seed = seed;
    r.steps = steps;
    r.tolerance = tolerance;
    const auto gen = cfm::sample_designs(model, spec, n, steps, seed);
    r.designs = gen.designs;
    r.achieved = simulate_all(r.designs);
    const auto wanted = spec.as_array();
    std::array<std::size_t, hydro::kLabelDims> hits{};
    for (std::size_t i = 0; i < r.achieved.size(); ++i) {
        if (!r.achieved[i]) continue;
        ++r.valid;
        const auto got = hydro::to_array(*r.achieved[i]);
        const auto cond = hydro::to_array(gen.sampled_conditions[i]);
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            r.parity[k].push_back({cond[k], got[k]});
            if (wanted[k] && std::abs(got[k] - *wanted[k]) <= tolerance * std::abs(*wanted[k])) ++hits[k];
        }
    }
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        r.within_tolerance[k] =
            wanted[k] && r.valid > 0 ? static_cast<double>(hits[k]) / static_cast<double>(r.valid) : kNaN;
    }
    compute_mre(r);
    fill_histograms(r);
    nlohmann::json target = nlohmann::json::object();
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        if (wanted[k]) target[std::string(hydro::kLabelNames[k])] = *wanted[k];
    }
    r.config = {{"target", target}, {"n", n}, {"steps", steps}, {"seed", seed}, {"tolerance", tolerance}};
    for (const auto& w : gen.warnings) r.config["warnings"].push_back(w);
    return r;
}

data::LabeledDataset build_augmented(const surrogate::SurrogateSet& s, std::size_t n, std::uint64_t seed) {
    data::LabeledDataset out;
    out.seed = seed;
    out.records.reserve(n);
    std::size_t drawn = 0;
    for (std::uint64_t round = 0; out.size() < n && drawn < 2 * n; ++round) {
        const std::size_t want = n - out.size();
        const auto designs = data::lhs_sample(want, seed ^ (round * 0x9E3779B97F4A7C15ULL));
        drawn += want;
        const auto labels = surrogate::predict_labels(s, designs);
        for (std::size_t i = 0; i < designs.size(); ++i) {
            if (!labels_ok(labels[i])) continue;
            out.records.push_back({designs[i], labels[i], data::Provenance::pseudo});
        }
    }
    if (out.size() < n) {
        throw DomainError("build_augmented: only " + std::to_string(out.size()) + " of " + std::to_string(n) +
                          " pseudo-labels satisfied the label invariants");
    }
    return out;
}

double relative_improvement(double mre_aug, double mre_base) {
    if (!(mre_base > 0.0)) throw DomainError("relative_improvement: baseline MRE must be positive");
    return 100.0 * (mre_aug - mre_base) / mre_base;
}

AugmentationTable run_augmentation_study(const data::LabeledDataset& base, const data::LabeledDataset& test,
                                         const AugmentationConfig& config, const StudyProgress& progress) {
    if (config.d_list.empty() || config.aug_sizes.empty()) throw DomainError("augmentation study: empty d_list or sizes");
    for (auto d : config.d_list) {
        if (d == 0 || d > base.size()) {
            throw DomainError("augmentation study: d = " + std::to_string(d) + " outside [1, " +
                              std::to_string(base.size()) + "]");
        }
    }
    auto say = [&](const std::string& m) {
        if (progress) progress(m);
    };
    AugmentationTable table;
    table.d_list = config.d_list;
    table.aug_sizes = config.aug_sizes;
    table.seed = config.seed;
    const auto order = data::shuffled(base, config.seed);
    for (std::size_t di = 0; di < config.d_list.size(); ++di) {
        const std::size_t d = config.d_list[di];
        const auto restricted = data::take(order, d);
        const std::uint64_t dseed = config.seed + 7919ULL * d;
        say("d=" + std::to_string(d) + ": baseline cfm");
        const auto base_cfm = cfm::train_cfm(restricted, config.cfm, dseed);
        const auto base_report = run_accuracy_study(base_cfm.model, test, config.steps, dseed);
        table.base_mre.push_back(base_report.mre);

        say("d=" + std::to_string(d) + ": surrogates");
        const auto sur = surrogate::train_surrogates(restricted, config.surrogate, dseed);
        std::vector<std::array<double, hydro::kLabelDims>> aug_row, imp_row;
        for (const std::size_t n_aug : config.aug_sizes) {
            say("d=" + std::to_string(d) + ": augmented cfm with " + std::to_string(n_aug) + " pseudo-labels");
            const auto aug = build_augmented(sur.set, n_aug, dseed ^ n_aug);
            const auto aug_cfm = cfm::train_cfm(aug, config.cfm, dseed ^ n_aug);
            const auto aug_report = run_accuracy_study(aug_cfm.model, test, config.steps, dseed);
            aug_row.push_back(aug_report.mre);
            std::array<double, hydro::kLabelDims> imp{};
            for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
                const double b = base_report.mre[k];
                imp[k] = std::isfinite(b) && b > 0.0 && std::isfinite(aug_report.mre[k])
                             ? relative_improvement(aug_report.mre[k], b)
                             : kNaN;
            }
            imp_row.push_back(imp);
        }
        table.aug_mre.push_back(std::move(aug_row));
        table.improvement.push_back(std::move(imp_row));
    }
    return table;
}

std::string to_csv(const AugmentationTable& t) {
    std::ostringstream out;
    out << "d";
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        out << ',' << hydro::kLabelNames[k] << "@base";
        for (auto n : t.aug_sizes) out << ',' << hydro::kLabelNames[k] << '@' << n;
        for (auto n : t.aug_sizes) out << ',' << hydro::kLabelNames[k] << "@improvement_pct_" << n;
    }
    out << '\n';
    for (std::size_t di = 0; di < t.d_list.size(); ++di) {
        out << t.d_list[di];
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            out << ',' << csv::format_number(t.base_mre[di][k]);
            for (std::size_t a = 0; a < t.aug_sizes.size(); ++a) out << ',' << csv::format_number(t.aug_mre[di][a][k]);
            for (std::size_t a = 0; a < t.aug_sizes.size(); ++a) {
                out << ',' << csv::format_number(t.improvement[di][a][k]);
            }
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::json to_json(const AugmentationTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t di = 0; di < t.d_list.size(); ++di) {
        nlohmann::json row{{"d", t.d_list[di]}};
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            const std::string name(hydro::kLabelNames[k]);
            row["base_mre"][name] = number_or_null(t.base_mre[di][k]);
            for (std::size_t a = 0; a < t.aug_sizes.size(); ++a) {
                const std::string key = std::to_string(t.aug_sizes[a]);
                row["aug_mre"][key][name] = number_or_null(t.aug_mre[di][a][k]);
                row["improvement_pct"][key][name] = number_or_null(t.improvement[di][a][k]);
            }
        }
        rows.push_back(row);
    }
    return {{"d_list", t.d_list}, {"aug_sizes", t.aug_sizes}, {"seed", t.seed}, {"rows", rows}};
}

nlohmann::json to_json(const StudyReport& r) {
    nlohmann::json mre, within;
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        const std::string name(hydro::kLabelNames[k]);
        mre[name] = number_or_null(r.mre[k]);
        within[name] = number_or_null(r.within_tolerance[k]);
    }
    nlohmann::json hist = nlohmann::json::array();
    for (const auto* group : {&r.design_histograms, &r.label_histograms}) {
        for (const auto& h : *group) hist.push_back({{"name", h.name}, {"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}});
    }
    nlohmann::json j{{"study", r.study},
                     {"requested", r.requested},
                     {"valid", r.valid},
                     {"mre", mre},
                     {"histograms", hist},
                     {"seed", r.seed},
                     {"steps", r.steps},
                     {"config", r.config}};
    if (r.study == "diversity") {
        j["within_tolerance"] = within;
        j["tolerance"] = r.tolerance;
    }
    return j;
}

std::string parity_svg(const StudyReport& r) {
    std::vector<std::string> panels;
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        plot::Series s;
        s.name = std::string(hydro::kLabelNames[k]);
        s.line = false;
        s.markers = true;
        for (const auto& p : r.parity[k]) {
            s.x.push_back(p[0]);
            s.y.push_back(p[1]);
        }
        std::ostringstream title;
        title << hydro::kLabelNames[k] << "  MRE " << csv::format_number(std::round(r.mre[k] * 1e4) / 1e4);
        panels.push_back(plot::render(plot::Panel{title.str(), "target", "achieved", {s}, true, std::nullopt, false}));
    }
    return plot::grid(panels, 3, r.study + " study: " + std::to_string(r.valid) + " valid of " +
                                     std::to_string(r.requested));
}

std::string histograms_svg(const std::vector<Histogram>& histograms, const std::string& title) {
    std::vector<std::string> panels;
    for (const auto& h : histograms) panels.push_back(plot::render(plot::Bars{h.name, h.lo, h.hi, h.counts}));
    return plot::grid(panels, 3, title);
}

std::string mre_vs_d_svg(const AugmentationTable& t) {
    static constexpr std::array<const char*, 4> kColors = {"#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    std::vector<std::string> panels;
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        plot::Panel p{std::string(hydro::kLabelNames[k]), "d", "MRE", {}, false, std::nullopt, false};
        plot::Series base{"base", {}, {}, "#1f77b4", true, true};
        for (std::size_t di = 0; di < t.d_list.size(); ++di) {
            base.x.push_back(static_cast<double>(t.d_list[di]));
            base.y.push_back(t.base_mre[di][k]);
        }
        p.series.push_back(base);
        for (std::size_t a = 0; a < t.aug_sizes.size(); ++a) {
            plot::Series s{"aug " + std::to_string(t.aug_sizes[a]), {}, {}, kColors[a % kColors.size()], true, true};
            for (std::size_t di = 0; di < t.d_list.size(); ++di) {
                s.x.push_back(static_cast<double>(t.d_list[di]));
                s.y.push_back(t.aug_mre[di][a][k]);
            }
            p.series.push_back(s);
        }
        panels.push_back(plot::render(p));
    }
    return plot::grid(panels, 3, "MRE against restricted dataset size");
}

}  // namespace propforge::eval

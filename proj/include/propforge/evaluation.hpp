#pragma once

// Validation studies: accuracy of generated designs against their target
// labels, diversity for one fixed target, and the effect of surrogate
// pseudo-labels on CFM accuracy for small training sets.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "propforge/cfm.hpp"
#include "propforge/dataset.hpp"
#include "propforge/surrogate.hpp"

namespace propforge::eval {

struct Histogram final {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;

    // Values outside [lo, hi] land in the edge bins.
    static Histogram of(std::string name, const std::vector<double>& values, std::size_t bins, double lo, double hi);
};

struct StudyReport final {
    std::string study;
    std::size_t requested = 0;
    std::size_t valid = 0;
    // NaN for a label when nothing valid was generated.
    std::array<double, hydro::kLabelDims> mre{};
    // (target, achieved) per valid design.
    std::array<std::vector<std::array<double, 2>>, hydro::kLabelDims> parity;
    std::vector<geometry::DesignVector> designs;
    std::vector<std::optional<hydro::LabelVector>> achieved;
    std::vector<Histogram> design_histograms;
    std::vector<Histogram> label_histograms;
    // Diversity only: fraction of valid designs within the relative
    // tolerance per targeted label (NaN for free labels).
    std::array<double, hydro::kLabelDims> within_tolerance{};
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    nlohmann::json config;
};

// One generated design per test label vector, re-simulated; invalid
// simulations are dropped before the per-label MRE.
StudyReport run_accuracy_study(const cfm::CfmModel& model, const data::LabeledDataset& test, std::size_t steps,
                               std::uint64_t seed);

StudyReport run_diversity_study(const cfm::CfmModel& model, const cfm::TargetSpec& spec, std::size_t n,
                                std::size_t steps, std::uint64_t seed, double tolerance = 0.10);

// LHS designs with surrogate pseudo-labels. Predictions that break the
// label invariants are replaced by fresh samples (at most 2n draws).
data::LabeledDataset build_augmented(const surrogate::SurrogateSet& s, std::size_t n, std::uint64_t seed);

// 100 (aug - base) / base. Throws DomainError when base <= 0.
double relative_improvement(double mre_aug, double mre_base);

struct AugmentationConfig final {
    std::vector<std::size_t> d_list;
    std::vector<std::size_t> aug_sizes;
    surrogate::SurrogateConfig surrogate;
    cfm::CfmConfig cfm;
    std::size_t steps = 100;
    std::uint64_t seed = 0;
};

struct AugmentationTable final {
    std::vector<std::size_t> d_list;
    std::vector<std::size_t> aug_sizes;
    // [d][label]
    std::vector<std::array<double, hydro::kLabelDims>> base_mre;
    // [d][aug][label]
    std::vector<std::vector<std::array<double, hydro::kLabelDims>>> aug_mre;
    std::vector<std::vector<std::array<double, hydro::kLabelDims>>> improvement;
    std::uint64_t seed = 0;
};

using StudyProgress = std::function<void(const std::string& message)>;

// For each d: restrict to the first d records of a seeded shuffle of
// `base`, train surrogates on them, build the augmented sets and compare
// CFM models trained on each through run_accuracy_study on `test`.
AugmentationTable run_augmentation_study(const data::LabeledDataset& base, const data::LabeledDataset& test,
                                         const AugmentationConfig& config, const StudyProgress& progress = {});

// d, then eta_star/j_star/kt_star blocks with one column per augmented size,
// e.g. "d,eta_star@10000,eta_star@100000,j_star@10000,...".
std::string to_csv(const AugmentationTable& table);
nlohmann::json to_json(const AugmentationTable& table);
nlohmann::json to_json(const StudyReport& report);

// SVG renderings.
std::string parity_svg(const StudyReport& report);
std::string histograms_svg(const std::vector<Histogram>& histograms, const std::string& title);
std::string mre_vs_d_svg(const AugmentationTable& table);

}  // namespace propforge::eval

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "propforge/geometry.hpp"
#include "propforge/hydro.hpp"

namespace propforge::data {

using geometry::DesignVector;
using hydro::LabelVector;

enum class Provenance { simulated, pseudo };

std::string_view to_string(Provenance p);

struct LabeledRecord final {
    DesignVector design;
    LabelVector labels;
    Provenance provenance = Provenance::simulated;

    friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

// Z-score statistics, fitted on a training split only.
struct NormStats final {
    std::array<double, geometry::kDesignDims> design_mean{};
    std::array<double, geometry::kDesignDims> design_std{};
    std::array<double, hydro::kLabelDims> label_mean{};
    std::array<double, hydro::kLabelDims> label_std{};

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct LabeledDataset final {
    std::vector<LabeledRecord> records;
    std::optional<NormStats> norm;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return records.size(); }
};

// Latin hypercube over the design box: one sample per equal-width stratum
// per continuous variable; n_blades from floor of a [0, 4) LHS axis.
std::vector<DesignVector> lhs_sample(std::size_t n, std::uint64_t seed);

using WarningSink = std::function<void(const std::string&)>;
using ProgressSink = std::function<void(std::size_t done, std::size_t total)>;

// Simulates LHS designs and keeps the ones with valid labels, drawing fresh
// samples for the dropped ones. Stops after 2n simulations and reports a
// shortfall through `warn`.
LabeledDataset generate_dataset(std::size_t n, std::uint64_t seed, const WarningSink& warn = {},
                                const ProgressSink& progress = {});

// First n_train records go to train, the rest to test.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& d, std::size_t n_train);

// Prefix of length n (the seed and norm carry over).
LabeledDataset take(const LabeledDataset& d, std::size_t n);
// Deterministic permutation of the records.
LabeledDataset shuffled(const LabeledDataset& d, std::uint64_t seed);
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

NormStats fit_norm(const LabeledDataset& train);

std::array<double, geometry::kDesignDims> apply_norm(const DesignVector& p, const NormStats& s);
std::array<double, geometry::kDesignDims> normalize_design(const std::array<double, geometry::kDesignDims>& x,
                                                           const NormStats& s);
std::array<double, geometry::kDesignDims> invert_design(const std::array<double, geometry::kDesignDims>& z,
                                                        const NormStats& s);
std::array<double, hydro::kLabelDims> apply_norm(const LabelVector& l, const NormStats& s);
std::array<double, hydro::kLabelDims> normalize_labels(const std::array<double, hydro::kLabelDims>& x,
                                                       const NormStats& s);
std::array<double, hydro::kLabelDims> invert_labels(const std::array<double, hydro::kLabelDims>& z,
                                                    const NormStats& s);

nlohmann::json to_json(const NormStats& s);
NormStats norm_from_json(const nlohmann::json& j);

inline constexpr std::string_view kDatasetHeader =
    "n_blades,P,w_rp,w_c,w_rc,camber,eta_star,j_star,kt_star,provenance,seed";

std::string to_csv(const LabeledDataset& d);
// Throws ParseError (with line number) on malformed rows and
// ValidationError when a record breaks the design or label invariants.
LabeledDataset parse_dataset_csv(std::string_view text);

void save_dataset(const LabeledDataset& d, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

// Throws ValidationError unless the label triple satisfies 0 < eta < 1,
// J inside the operating grid and kT > 0.
void validate_labels(const LabelVector& l);

// Raw design and label columns (one sample per column of the result).
std::vector<std::array<double, geometry::kDesignDims>> design_rows(const LabeledDataset& d);
std::vector<std::array<double, hydro::kLabelDims>> label_rows(const LabeledDataset& d);

// Default data root: $PROPFORGE_DATA_DIR or ./propforge-data.
std::filesystem::path default_data_dir();

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace propforge::data

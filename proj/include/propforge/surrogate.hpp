#pragma once

// Forward regressors, one per performance label, from the normalized design
// vector to the normalized label.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "propforge/cfm.hpp"
#include "propforge/dataset.hpp"
#include "propforge/nn/mlp.hpp"

namespace propforge::surrogate {

struct SurrogateConfig final {
    std::size_t hidden_layers = 6;
    std::size_t hidden_width = 500;
    nn::TrainSchedule schedule{500, 500, 1e-3, 250, 0.1};
};

struct SurrogateSet final {
    // Indexed like hydro::kLabelNames.
    std::array<nn::MlpModel, hydro::kLabelDims> models;
    data::NormStats norm;
};

struct SurrogateTraining final {
    SurrogateSet set;
    std::array<std::vector<double>, hydro::kLabelDims> loss_history;
};

SurrogateTraining train_surrogates(const data::LabeledDataset& train, const SurrogateConfig& config,
                                   std::uint64_t seed, const nn::EpochCallback& on_epoch = {});

// Raw (denormalized, unclamped) predictions.
hydro::LabelVector predict_labels(const SurrogateSet& s, const geometry::DesignVector& p);
std::vector<hydro::LabelVector> predict_labels(const SurrogateSet& s, std::span<const geometry::DesignVector> designs);

// Mean of |t - p| / |t|. Throws DomainError on empty input, length
// mismatch or a zero target.
double mre(std::span<const double> targets, std::span<const double> predictions);

// A design passes when every targeted label's prediction is within `tol`
// relative error of the target; untargeted labels are ignored.
std::vector<bool> validate_designs(const SurrogateSet& s, std::span<const geometry::DesignVector> designs,
                                   const cfm::TargetSpec& targets, double tol);
std::vector<bool> validate_predictions(std::span<const hydro::LabelVector> predictions,
                                       const cfm::TargetSpec& targets, double tol);

// Per-label checkpoints: <dir>/surrogate_<label>.json.
void save_surrogates(const SurrogateSet& s, const std::filesystem::path& dir);
// Throws MissingArtifactError naming the first absent checkpoint.
SurrogateSet load_surrogates(const std::filesystem::path& dir);
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::size_t label);

}  // namespace propforge::surrogate

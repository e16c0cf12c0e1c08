#pragma once

// Conditional flow matching over normalized design vectors.
//
// The field network sees (x_t, t, label) concatenated into a 10-vector and
// regresses the straight-line velocity x1 - x0 between a Gaussian source
// sample x0 and a data point x1. Generation integrates the learned field
// from t = 0 to t = 1 with fixed-step RK4 and decodes back to the design box.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "propforge/dataset.hpp"
#include "propforge/nn/mlp.hpp"

namespace propforge::cfm {

using nn::Matrix;
using nn::Vector;

inline constexpr std::size_t kDesignDims = geometry::kDesignDims;
inline constexpr std::size_t kLabelDims = hydro::kLabelDims;
inline constexpr std::size_t kFieldInputDim = kDesignDims + 1 + kLabelDims;

// Per-label [lo, hi] of the raw training labels.
struct LabelEnvelope final {
    std::array<double, kLabelDims> lo{};
    std::array<double, kLabelDims> hi{};

    static LabelEnvelope of(const data::LabeledDataset& d);
    bool contains(std::size_t label, double value) const;
};

struct CfmModel final {
    nn::MlpModel field;
    data::NormStats norm;
    LabelEnvelope envelope;
};

// v(x, t, l) for a batch: x is 6 x B, t has B entries, labels is 3 x B.
using VectorField = std::function<Matrix(const Matrix& x, const Vector& t, const Matrix& labels)>;

// Stacks (x, t, labels) into the 10 x B network input.
Matrix field_inputs(const Matrix& x, const Vector& t, const Matrix& labels);

// Wraps a network; the model must outlive the returned field.
VectorField network_field(const nn::MlpModel& m);

// x_t = t x1 + (1 - t) x0, column by column.
Matrix interpolate_path(const Matrix& x0, const Matrix& x1, const Vector& t);

struct CfmBatch final {
    Matrix x0;
    Matrix x1;
    Matrix labels;
    Vector t;
    Matrix xt;
    Matrix velocity;  // x1 - x0
};

// Draws x0 ~ N(0, I) and t ~ U(0, 1) for every column of x1.
CfmBatch draw_cfm_batch(const Matrix& x1, const Matrix& labels, std::mt19937_64& rng);

// Batch mean of |field(x_t, t, l) - (x1 - x0)|^2.
double cfm_loss(const VectorField& field, const CfmBatch& batch);

// Draws a batch and returns the loss and its network gradients.
nn::Gradients cfm_batch_loss(const nn::MlpModel& m, const Matrix& x1, const Matrix& labels, std::mt19937_64& rng);

struct CfmConfig final {
    std::size_t hidden_layers = 8;
    std::size_t hidden_width = 500;
    nn::TrainSchedule schedule{10000, 500, 1e-3, 5000, 0.1};
};

struct CfmTraining final {
    CfmModel model;
    std::vector<double> loss_history;
};

// Fits the normalization on `train` unless `norm` is supplied.
CfmTraining train_cfm(const data::LabeledDataset& train, const CfmConfig& config, std::uint64_t seed,
                      const std::optional<data::NormStats>& norm = std::nullopt,
                      const nn::EpochCallback& on_epoch = {});

// Randomly initialized field with the same normalization and envelope.
CfmModel untrained_cfm(const data::LabeledDataset& train, const CfmConfig& config, std::uint64_t seed);

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(std::size_t step, std::size_t sample);
    std::size_t step() const noexcept { return step_; }
    std::size_t sample() const noexcept { return sample_; }

private:
    std::size_t step_;
    std::size_t sample_;
};

// Classic RK4 from t = 0 to 1 with step 1/steps; every column is a sample.
Matrix integrate_flow(const VectorField& field, const Matrix& x0, const Matrix& labels, std::size_t steps);
Vector integrate_flow(const VectorField& field, const Vector& x0, const Vector& label, std::size_t steps);

struct DecodedDesign final {
    geometry::DesignVector design;
    std::array<bool, kDesignDims> clamped{};

    bool any_clamped() const;
};

// Denormalizes, rounds n_blades to {2..5} and clamps to the design box,
// flagging any change larger than 1e-6.
DecodedDesign decode_design(const std::array<double, kDesignDims>& x, const data::NormStats& norm);

struct TargetSpec final {
    std::optional<double> eta_star;
    std::optional<double> j_star;
    std::optional<double> kt_star;

    std::array<std::optional<double>, kLabelDims> as_array() const { return {eta_star, j_star, kt_star}; }
    static TargetSpec full(const hydro::LabelVector& l) { return {l.eta_star, l.j_star, l.kt_star}; }
    // Throws DomainError when no label is set.
    void validate() const;
};

struct GenerationReport final {
    std::vector<geometry::DesignVector> designs;
    std::vector<std::array<bool, kDesignDims>> clamped;
    std::vector<hydro::LabelVector> sampled_conditions;
    std::vector<std::string> warnings;
};

// Free labels are drawn uniformly from the training envelope.
GenerationReport sample_designs(const CfmModel& model, const TargetSpec& spec, std::size_t n, std::size_t steps,
                                std::uint64_t seed);

// One design per given (complete) label vector.
GenerationReport sample_for_labels(const CfmModel& model, const std::vector<hydro::LabelVector>& conditions,
                                   std::size_t steps, std::uint64_t seed);

// Columns: n_blades,P,w_rp,w_c,w_rc,camber,cond_eta_star,cond_j_star,cond_kt_star,clamped
// where clamped lists the clamped design columns separated by '|'.
std::string to_csv(const GenerationReport& report);

nlohmann::json to_json(const LabelEnvelope& e);
LabelEnvelope envelope_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CfmModel& m);
CfmModel cfm_from_json(const nlohmann::json& j);
void save_cfm(const CfmModel& m, const std::filesystem::path& path);
// Throws MissingArtifactError("cfm checkpoint not found: ...") when absent.
CfmModel load_cfm(const std::filesystem::path& path);

}  // namespace propforge::cfm

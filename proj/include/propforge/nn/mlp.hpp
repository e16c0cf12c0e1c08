#pragma once

// Dense ReLU network with an identity output layer, trained on mean
// squared error. Batches are stored one sample per column.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace propforge::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct MlpConfig final {
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    // Zero gives a single affine map.
    std::size_t hidden_layers = 1;
    std::size_t hidden_width = 1;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

struct DenseLayer final {
    Matrix weight;  // out x in
    Vector bias;    // out
};

class MlpModel final {
public:
    MlpModel() = default;
    // Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    explicit MlpModel(const MlpConfig& config);
    MlpModel(const MlpConfig& config, std::vector<DenseLayer> layers);

    const MlpConfig& config() const noexcept { return config_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    std::size_t parameter_count() const;

    Matrix forward(const Matrix& inputs) const;
    Vector forward(const Vector& x) const;

private:
    MlpConfig config_;
    std::vector<DenseLayer> layers_;
};

// Same shapes as the model layers.
struct Gradients final {
    std::vector<DenseLayer> layers;
    double loss = 0.0;
};

// loss = mean over samples and outputs of (y - t)^2, with its gradient for
// every weight and bias.
Gradients backward(const MlpModel& m, const Matrix& inputs, const Matrix& targets);

struct AdamState final {
    std::vector<DenseLayer> first_moment;
    std::vector<DenseLayer> second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_model(const MlpModel& m);
};

// Bias-corrected Adam update of every parameter in place.
void adam_step(AdamState& state, MlpModel& m, const Gradients& g, double lr);

struct TrainSchedule final {
    std::size_t epochs = 1;
    std::size_t batch_size = 1;
    double lr_initial = 1e-3;
    std::size_t lr_drop_epoch = 1;
    double lr_drop_factor = 0.1;

    void validate() const;
    double learning_rate(std::size_t epoch) const;
};

// Builds a (inputs, targets) mini-batch from sample indices; may draw from rng.
using BatchBuilder =
    std::function<std::pair<Matrix, Matrix>(const std::vector<std::size_t>& indices, std::mt19937_64& rng)>;
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Shuffled mini-batches each epoch (last partial batch kept, batch size
// capped at the sample count); returns the per-epoch mean batch loss.
std::vector<double> train_batches(MlpModel& m, std::size_t sample_count, const TrainSchedule& schedule,
                                  std::uint64_t seed, const BatchBuilder& build,
                                  const EpochCallback& on_epoch = {});

std::vector<double> train(MlpModel& m, const Matrix& inputs, const Matrix& targets, const TrainSchedule& schedule,
                          std::uint64_t seed, const EpochCallback& on_epoch = {});

// Max over parameters of |analytic - central difference| / max(|analytic|, |fd|, 1e-5)
// for the single-sample batch (x, t). The floor keeps vanishing gradients
// from amplifying difference-quotient rounding.
double grad_check(const MlpModel& m, const Vector& x, const Vector& t, double h);

nlohmann::json to_json(const MlpModel& m);
MlpModel mlp_from_json(const nlohmann::json& j);

}  // namespace propforge::nn

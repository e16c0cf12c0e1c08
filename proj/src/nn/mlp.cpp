#include "propforge/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "propforge/error.hpp"

namespace propforge::nn {

namespace {

constexpr int kCheckpointVersion = 1;

void check_same_shape(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b, const char* what) {
    if (a.size() != b.size()) throw DomainError(std::string(what) + ": layer count mismatch");
    for (std::size_t l = 0; l < a.size(); ++l) {
        if (a[l].weight.rows() != b[l].weight.rows() || a[l].weight.cols() != b[l].weight.cols() ||
            a[l].bias.size() != b[l].bias.size()) {
            throw DomainError(std::string(what) + ": shape mismatch in layer " + std::to_string(l));
        }
    }
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
    std::vector<DenseLayer> out;
    out.reserve(layers.size());
    for (const auto& l : layers) {
        out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> layer_shapes(const MlpConfig& c) {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (out, in)
    std::size_t in = c.input_dim;
    for (std::size_t l = 0; l < c.hidden_layers; ++l) {
        shapes.emplace_back(c.hidden_width, in);
        in = c.hidden_width;
    }
    shapes.emplace_back(c.output_dim, in);
    return shapes;
}

}  // namespace

void MlpConfig::validate() const {
    if (input_dim < 1 || output_dim < 1) throw DomainError("MlpConfig: input_dim and output_dim must be >= 1");
    if (hidden_layers > 0 && hidden_width < 1) throw DomainError("MlpConfig: hidden_width must be >= 1");
}

MlpModel::MlpModel(const MlpConfig& config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config.seed);
    for (const auto& [out, in] : layer_shapes(config)) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer layer{Matrix(out, in), Vector::Zero(static_cast<Eigen::Index>(out))};
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
        }
        layers_.push_back(std::move(layer));
    }
}

MlpModel::MlpModel(const MlpConfig& config, std::vector<DenseLayer> layers)
    : config_(config), layers_(std::move(layers)) {
    config_.validate();
    const auto shapes = layer_shapes(config_);
    if (shapes.size() != layers_.size()) throw DomainError("MlpModel: layer count does not match config");
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const auto& [out, in] = shapes[l];
        if (static_cast<std::size_t>(layers_[l].weight.rows()) != out ||
            static_cast<std::size_t>(layers_[l].weight.cols()) != in ||
            static_cast<std::size_t>(layers_[l].bias.size()) != out) {
            throw DomainError("MlpModel: layer " + std::to_string(l) + " shape does not match config");
        }
    }
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Matrix MlpModel::forward(const Matrix& inputs) const {
    if (static_cast<std::size_t>(inputs.rows()) != config_.input_dim) {
        throw DomainError("forward: expected " + std::to_string(config_.input_dim) + " input rows, got " +
                          std::to_string(inputs.rows()));
    }
    Matrix a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = layers_[l].weight * a;
        z.colwise() += layers_[l].bias;
        if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Vector MlpModel::forward(const Vector& x) const { return forward(Matrix(x)).col(0); }

Gradients backward(const MlpModel& m, const Matrix& inputs, const Matrix& targets) {
    const auto& cfg = m.config();
    if (inputs.cols() == 0) throw DomainError("backward: empty batch");
    if (static_cast<std::size_t>(inputs.rows()) != cfg.input_dim) throw DomainError("backward: input shape mismatch");
    if (static_cast<std::size_t>(targets.rows()) != cfg.output_dim || targets.cols() != inputs.cols()) {
        throw DomainError("backward: target shape mismatch");
    }
    const auto& layers = m.layers();
    const std::size_t depth = layers.size();

    // activations[l] is the input to layer l.
    std::vector<Matrix> activations;
    activations.reserve(depth + 1);
    activations.push_back(inputs);
    for (std::size_t l = 0; l < depth; ++l) {
        Matrix z = layers[l].weight * activations.back();
        z.colwise() += layers[l].bias;
        if (l + 1 < depth) z = z.cwiseMax(0.0);
        activations.push_back(std::move(z));
    }

    const Matrix diff = activations.back() - targets;
    const double scale = 1.0 / static_cast<double>(diff.size());
    Gradients g;
    g.loss = diff.squaredNorm() * scale;
    g.layers.resize(depth);

    Matrix delta = 2.0 * scale * diff;
    for (std::size_t l = depth; l-- > 0;) {
        g.layers[l].weight = delta * activations[l].transpose();
        g.layers[l].bias = delta.rowwise().sum();
        if (l > 0) {
            Matrix upstream = layers[l].weight.transpose() * delta;
            // ReLU gate: activations[l] > 0 exactly where the pre-activation was positive.
            delta = (activations[l].array() > 0.0).select(upstream, 0.0);
        }
    }
    return g;
}

AdamState AdamState::for_model(const MlpModel& m) {
    AdamState s;
    s.first_moment = zeros_like(m.layers());
    s.second_moment = zeros_like(m.layers());
    return s;
}

void adam_step(AdamState& state, MlpModel& m, const Gradients& g, double lr) {
    auto& params = m.layers();
    check_same_shape(params, g.layers, "adam_step gradients");
    check_same_shape(params, state.first_moment, "adam_step first moment");
    check_same_shape(params, state.second_moment, "adam_step second moment");
    ++state.step;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double eps = state.epsilon;
    auto update = [&](auto& p, auto& mom1, auto& mom2, const auto& grad) {
        mom1 = b1 * mom1 + (1.0 - b1) * grad;
        mom2 = b2 * mom2 + (1.0 - b2) * grad.cwiseProduct(grad);
        p.array() -= lr * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].weight, state.first_moment[l].weight, state.second_moment[l].weight, g.layers[l].weight);
        update(params[l].bias, state.first_moment[l].bias, state.second_moment[l].bias, g.layers[l].bias);
    }
}

double grad_check(const MlpModel& m, const Vector& x, const Vector& t, double h) {
    if (!(h > 0.0)) throw DomainError("grad_check: h must be positive");
    const Matrix xs = x;
    const Matrix ts = t;
    const Gradients analytic = backward(m, xs, ts);
    MlpModel probe = m;
    auto loss_at = [&]() {
        const Matrix diff = probe.forward(xs) - ts;
        return diff.squaredNorm() / static_cast<double>(diff.size());
    };
    double worst = 0.0;
    auto compare = [&](double& param, double grad) {
        const double saved = param;
        param = saved + h;
        const double up = loss_at();
        param = saved - h;
        const double down = loss_at();
        param = saved;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(grad), std::abs(fd), 1e-5});
        worst = std::max(worst, std::abs(grad - fd) / denom);
    };
    for (std::size_t l = 0; l < probe.layers().size(); ++l) {
        auto& layer = probe.layers()[l];
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            compare(layer.weight.data()[i], analytic.layers[l].weight.data()[i]);
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            compare(layer.bias.data()[i], analytic.layers[l].bias.data()[i]);
        }
    }
    return worst;
}

nlohmann::json to_json(const MlpModel& m) {
    const auto& c = m.config();
    nlohmann::json j;
    j["format"] = "propforge-mlp";
    j["version"] = kCheckpointVersion;
    j["config"] = {{"input_dim", c.input_dim},
                   {"output_dim", c.output_dim},
                   {"hidden_layers", c.hidden_layers},
                   {"hidden_width", c.hidden_width},
                   {"seed", c.seed}};
    auto layers = nlohmann::json::array();
    for (const auto& l : m.layers()) {
        std::vector<double> w(l.weight.data(), l.weight.data() + l.weight.size());
        std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back({{"rows", l.weight.rows()}, {"cols", l.weight.cols()}, {"weight", w}, {"bias", b}});
    }
    j["layers"] = std::move(layers);
    return j;
}

MlpModel mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "propforge-mlp") throw ParseError("not an mlp checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) {
            throw ParseError("unsupported mlp checkpoint version " + j.at("version").dump());
        }
        const auto& jc = j.at("config");
        MlpConfig c{jc.at("input_dim").get<std::size_t>(), jc.at("output_dim").get<std::size_t>(),
                    jc.at("hidden_layers").get<std::size_t>(), jc.at("hidden_width").get<std::size_t>(),
                    jc.at("seed").get<std::uint64_t>()};
        std::vector<DenseLayer> layers;
        for (const auto& jl : j.at("layers")) {
            const auto rows = jl.at("rows").get<Eigen::Index>();
            const auto cols = jl.at("cols").get<Eigen::Index>();
            const auto w = jl.at("weight").get<std::vector<double>>();
            const auto b = jl.at("bias").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows) {
                throw ParseError("mlp checkpoint: layer data size mismatch");
            }
            layers.push_back({Eigen::Map<const Matrix>(w.data(), rows, cols),
                              Eigen::Map<const Vector>(b.data(), rows)});
        }
        return MlpModel(c, std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mlp checkpoint: ") + e.what());
    }
}

}  // namespace propforge::nn

#include "propforge/surrogate.hpp"

#include <cmath>

#include "propforge/error.hpp"

namespace propforge::surrogate {

namespace {

constexpr int kCheckpointVersion = 1;

nn::Matrix normalized_designs(std::span<const geometry::DesignVector> designs, const data::NormStats& norm) {
    nn::Matrix x(static_cast<Eigen::Index>(geometry::kDesignDims), static_cast<Eigen::Index>(designs.size()));
    for (std::size_t i = 0; i < designs.size(); ++i) {
        const auto z = data::apply_norm(designs[i], norm);
        for (std::size_t k = 0; k < z.size(); ++k) x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = z[k];
    }
    return x;
}

}  // namespace

SurrogateTraining train_surrogates(const data::LabeledDataset& train, const SurrogateConfig& config,
                                   std::uint64_t seed, const nn::EpochCallback& on_epoch) {
    if (train.records.empty()) throw DomainError("train_surrogates: empty dataset");
    SurrogateTraining out;
    out.set.norm = data::fit_norm(train);
    std::vector<geometry::DesignVector> designs;
    designs.reserve(train.size());
    for (const auto& r : train.records) designs.push_back(r.design);
    const nn::Matrix x = normalized_designs(designs, out.set.norm);
    for (std::size_t label = 0; label < hydro::kLabelDims; ++label) {
        nn::Matrix t(1, static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            const auto z = data::apply_norm(train.records[i].labels, out.set.norm);
            t(0, static_cast<Eigen::Index>(i)) = z[label];
        }
        const std::uint64_t label_seed = seed + 1000003ULL * (label + 1);
        nn::MlpModel m(nn::MlpConfig{geometry::kDesignDims, 1, config.hidden_layers, config.hidden_width, label_seed});
        out.loss_history[label] = nn::train(m, x, t, config.schedule, label_seed, on_epoch);
        out.set.models[label] = std::move(m);
    }
    return out;
}

std::vector<hydro::LabelVector> predict_labels(const SurrogateSet& s, std::span<const geometry::DesignVector> designs) {
    std::vector<hydro::LabelVector> out(designs.size());
    if (designs.empty()) return out;
    const nn::Matrix x = normalized_designs(designs, s.norm);
    std::array<nn::Matrix, hydro::kLabelDims> z;
    for (std::size_t label = 0; label < hydro::kLabelDims; ++label) z[label] = s.models[label].forward(x);
    for (std::size_t i = 0; i < designs.size(); ++i) {
        std::array<double, hydro::kLabelDims> zi{};
        for (std::size_t label = 0; label < hydro::kLabelDims; ++label) zi[label] = z[label](0, static_cast<Eigen::Index>(i));
        out[i] = hydro::label_from_array(data::invert_labels(zi, s.norm));
    }
    return out;
}

hydro::LabelVector predict_labels(const SurrogateSet& s, const geometry::DesignVector& p) {
    return predict_labels(s, std::span<const geometry::DesignVector>(&p, 1)).front();
}

double mre(std::span<const double> targets, std::span<const double> predictions) {
    if (targets.empty()) throw DomainError("mre: empty input");
    if (targets.size() != predictions.size()) throw DomainError("mre: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] == 0.0) throw DomainError("mre: zero target at index " + std::to_string(i));
        sum += std::abs(targets[i] - predictions[i]) / std::abs(targets[i]);
    }
    return sum / static_cast<double>(targets.size());
}

std::vector<bool> validate_predictions(std::span<const hydro::LabelVector> predictions,
                                       const cfm::TargetSpec& targets, double tol) {
    targets.validate();
    const auto wanted = targets.as_array();
    std::vector<bool> out(predictions.size(), true);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto p = hydro::to_array(predictions[i]);
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            if (!wanted[k]) continue;
            const double rel = std::abs(p[k] - *wanted[k]) / std::abs(*wanted[k]);
            if (!(rel <= tol)) out[i] = false;
        }
    }
    return out;
}

std::vector<bool> validate_designs(const SurrogateSet& s, std::span<const geometry::DesignVector> designs,
                                   const cfm::TargetSpec& targets, double tol) {
    const auto predictions = predict_labels(s, designs);
    return validate_predictions(predictions, targets, tol);
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::size_t label) {
    return dir / ("surrogate_" + std::string(hydro::kLabelNames.at(label)) + ".json");
}

void save_surrogates(const SurrogateSet& s, const std::filesystem::path& dir) {
    for (std::size_t label = 0; label < hydro::kLabelDims; ++label) {
        nlohmann::json j{{"format", "propforge-surrogate"},
                         {"version", kCheckpointVersion},
                         {"label", hydro::kLabelNames[label]},
                         {"model", nn::to_json(s.models[label])},
                         {"norm", data::to_json(s.norm)}};
        data::write_text_file(checkpoint_path(dir, label), j.dump());
    }
}

SurrogateSet load_surrogates(const std::filesystem::path& dir) {
    SurrogateSet s;
    for (std::size_t label = 0; label < hydro::kLabelDims; ++label) {
        const auto path = checkpoint_path(dir, label);
        if (!std::filesystem::exists(path)) {
            throw MissingArtifactError("surrogate checkpoint not found: " + path.string());
        }
        try {
            const auto j = nlohmann::json::parse(data::read_text_file(path));
            if (j.at("format") != "propforge-surrogate" || j.at("version").get<int>() != kCheckpointVersion) {
                throw ParseError("unsupported surrogate checkpoint " + path.string());
            }
            if (j.at("label") != hydro::kLabelNames[label]) throw ParseError("label mismatch in " + path.string());
            s.models[label] = nn::mlp_from_json(j.at("model"));
            const auto norm = data::norm_from_json(j.at("norm"));
            if (label > 0 && !(norm == s.norm)) throw ParseError("surrogate checkpoints disagree on normalization");
            s.norm = norm;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        const auto& c = s.models[label].config();
        if (c.input_dim != geometry::kDesignDims || c.output_dim != 1) {
            throw ParseError(path.string() + ": surrogate must map 6 inputs to 1 output");
        }
    }
    return s;
}

}  // namespace propforge::surrogate

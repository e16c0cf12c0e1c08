#include "propforge/cfm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <sstream>

#include "propforge/csv.hpp"
#include "propforge/error.hpp"

namespace propforge::cfm {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr double kClampTolerance = 1e-6;
constexpr std::size_t kSampleChunk = 1024;

Matrix design_matrix(const data::LabeledDataset& d, const data::NormStats& norm) {
    Matrix x(static_cast<Eigen::Index>(kDesignDims), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto z = data::apply_norm(d.records[i].design, norm);
        for (std::size_t k = 0; k < kDesignDims; ++k) x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = z[k];
    }
    return x;
}

Matrix label_matrix(const std::vector<hydro::LabelVector>& labels, const data::NormStats& norm) {
    Matrix l(static_cast<Eigen::Index>(kLabelDims), static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto z = data::apply_norm(labels[i], norm);
        for (std::size_t k = 0; k < kLabelDims; ++k) l(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = z[k];
    }
    return l;
}

std::vector<hydro::LabelVector> labels_of(const data::LabeledDataset& d) {
    std::vector<hydro::LabelVector> out;
    out.reserve(d.size());
    for (const auto& r : d.records) out.push_back(r.labels);
    return out;
}

nn::MlpConfig field_config(const CfmConfig& config, std::uint64_t seed) {
    return nn::MlpConfig{kFieldInputDim, kDesignDims, config.hidden_layers, config.hidden_width, seed};
}

// Generates designs for fully specified conditions, drawing x0 from rng.
GenerationReport generate(const CfmModel& model, const std::vector<hydro::LabelVector>& conditions,
                          std::size_t steps, std::mt19937_64& rng) {
    GenerationReport report;
    const std::size_t n = conditions.size();
    Matrix x0(static_cast<Eigen::Index>(kDesignDims), static_cast<Eigen::Index>(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
        for (Eigen::Index r = 0; r < x0.rows(); ++r) x0(r, c) = gauss(rng);
    }
    const Matrix labels = label_matrix(conditions, model.norm);
    const auto field = network_field(model.field);
    report.designs.reserve(n);
    report.clamped.reserve(n);
    for (std::size_t start = 0; start < n; start += kSampleChunk) {
        const auto width = static_cast<Eigen::Index>(std::min(kSampleChunk, n - start));
        Matrix x1;
        try {
            const Matrix x0_chunk = x0.middleCols(static_cast<Eigen::Index>(start), width);
            const Matrix l_chunk = labels.middleCols(static_cast<Eigen::Index>(start), width);
            x1 = integrate_flow(field, x0_chunk, l_chunk, steps);
        } catch (const IntegrationError& e) {
            throw IntegrationError(e.step(), start + e.sample());
        }
        for (Eigen::Index c = 0; c < width; ++c) {
            std::array<double, kDesignDims> x{};
            for (std::size_t k = 0; k < kDesignDims; ++k) x[k] = x1(static_cast<Eigen::Index>(k), c);
            const auto decoded = decode_design(x, model.norm);
            report.designs.push_back(decoded.design);
            report.clamped.push_back(decoded.clamped);
        }
    }
    report.sampled_conditions = conditions;
    return report;
}

}  // namespace

LabelEnvelope LabelEnvelope::of(const data::LabeledDataset& d) {
    if (d.records.empty()) throw DomainError("label envelope of empty dataset");
    LabelEnvelope e;
    e.lo.fill(std::numeric_limits<double>::infinity());
    e.hi.fill(-std::numeric_limits<double>::infinity());
    for (const auto& r : d.records) {
        const auto l = hydro::to_array(r.labels);
        for (std::size_t k = 0; k < kLabelDims; ++k) {
            e.lo[k] = std::min(e.lo[k], l[k]);
            e.hi[k] = std::max(e.hi[k], l[k]);
        }
    }
    return e;
}

bool LabelEnvelope::contains(std::size_t label, double value) const {
    return value >= lo.at(label) && value <= hi.at(label);
}

Matrix field_inputs(const Matrix& x, const Vector& t, const Matrix& labels) {
    if (x.rows() != static_cast<Eigen::Index>(kDesignDims) || labels.rows() != static_cast<Eigen::Index>(kLabelDims) ||
        t.size() != x.cols() || labels.cols() != x.cols()) {
        throw DomainError("field_inputs: shape mismatch");
    }
    Matrix in(static_cast<Eigen::Index>(kFieldInputDim), x.cols());
    in.topRows(static_cast<Eigen::Index>(kDesignDims)) = x;
    in.row(static_cast<Eigen::Index>(kDesignDims)) = t.transpose();
    in.bottomRows(static_cast<Eigen::Index>(kLabelDims)) = labels;
    return in;
}

VectorField network_field(const nn::MlpModel& m) {
    return [&m](const Matrix& x, const Vector& t, const Matrix& labels) { return m.forward(field_inputs(x, t, labels)); };
}

Matrix interpolate_path(const Matrix& x0, const Matrix& x1, const Vector& t) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols() || t.size() != x0.cols()) {
        throw DomainError("interpolate_path: shape mismatch");
    }
    Matrix xt(x0.rows(), x0.cols());
    for (Eigen::Index c = 0; c < x0.cols(); ++c) xt.col(c) = t(c) * x1.col(c) + (1.0 - t(c)) * x0.col(c);
    return xt;
}

CfmBatch draw_cfm_batch(const Matrix& x1, const Matrix& labels, std::mt19937_64& rng) {
    if (x1.cols() == 0) throw DomainError("cfm batch: empty batch");
    if (labels.cols() != x1.cols()) throw DomainError("cfm batch: label count mismatch");
    CfmBatch b;
    b.x1 = x1;
    b.labels = labels;
    b.x0.resize(x1.rows(), x1.cols());
    b.t.resize(x1.cols());
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (Eigen::Index c = 0; c < x1.cols(); ++c) {
        for (Eigen::Index r = 0; r < x1.rows(); ++r) b.x0(r, c) = gauss(rng);
        b.t(c) = uniform(rng);
    }
    b.xt = interpolate_path(b.x0, b.x1, b.t);
    b.velocity = b.x1 - b.x0;
    return b;
}

double cfm_loss(const VectorField& field, const CfmBatch& batch) {
    const Matrix diff = field(batch.xt, batch.t, batch.labels) - batch.velocity;
    return diff.squaredNorm() / static_cast<double>(diff.cols());
}

nn::Gradients cfm_batch_loss(const nn::MlpModel& m, const Matrix& x1, const Matrix& labels, std::mt19937_64& rng) {
    const auto b = draw_cfm_batch(x1, labels, rng);
    auto g = nn::backward(m, field_inputs(b.xt, b.t, b.labels), b.velocity);
    // backward averages over output dims too; the flow loss sums them.
    const double dims = static_cast<double>(kDesignDims);
    g.loss *= dims;
    for (auto& l : g.layers) {
        l.weight *= dims;
        l.bias *= dims;
    }
    return g;
}

CfmTraining train_cfm(const data::LabeledDataset& train, const CfmConfig& config, std::uint64_t seed,
                      const std::optional<data::NormStats>& norm, const nn::EpochCallback& on_epoch) {
    if (train.records.empty()) throw DomainError("train_cfm: empty dataset");
    CfmTraining out;
    out.model.norm = norm ? *norm : data::fit_norm(train);
    out.model.envelope = LabelEnvelope::of(train);
    out.model.field = nn::MlpModel(field_config(config, seed));
    const Matrix x1 = design_matrix(train, out.model.norm);
    const Matrix labels = label_matrix(labels_of(train), out.model.norm);
    auto build = [&](const std::vector<std::size_t>& idx, std::mt19937_64& rng) {
        Matrix bx(x1.rows(), static_cast<Eigen::Index>(idx.size()));
        Matrix bl(labels.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            bx.col(static_cast<Eigen::Index>(k)) = x1.col(static_cast<Eigen::Index>(idx[k]));
            bl.col(static_cast<Eigen::Index>(k)) = labels.col(static_cast<Eigen::Index>(idx[k]));
        }
        auto b = draw_cfm_batch(bx, bl, rng);
        return std::pair{field_inputs(b.xt, b.t, b.labels), std::move(b.velocity)};
    };
    out.loss_history = nn::train_batches(out.model.field, train.size(), config.schedule, seed ^ 0x5DEECE66DULL,
                                         build, [&](std::size_t epoch, double loss) {
                                             if (on_epoch) on_epoch(epoch, loss * static_cast<double>(kDesignDims));
                                         });
    // The optimizer sees the per-entry mean; report the per-sample squared
    // norm so the history matches cfm_loss.
    for (auto& l : out.loss_history) l *= static_cast<double>(kDesignDims);
    return out;
}

CfmModel untrained_cfm(const data::LabeledDataset& train, const CfmConfig& config, std::uint64_t seed) {
    return CfmModel{nn::MlpModel(field_config(config, seed)), data::fit_norm(train), LabelEnvelope::of(train)};
}

IntegrationError::IntegrationError(std::size_t step, std::size_t sample)
    : std::runtime_error("non-finite state at integration step " + std::to_string(step) + " (sample " +
                         std::to_string(sample) + ")"),
      step_(step),
      sample_(sample) {}

Matrix integrate_flow(const VectorField& field, const Matrix& x0, const Matrix& labels, std::size_t steps) {
    if (steps < 1) throw DomainError("integrate_flow: steps must be >= 1");
    const double h = 1.0 / static_cast<double>(steps);
    Matrix x = x0;
    Vector t(x.cols());
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * h;
        t.setConstant(t0);
        const Matrix k1 = field(x, t, labels);
        t.setConstant(t0 + 0.5 * h);
        const Matrix k2 = field(x + 0.5 * h * k1, t, labels);
        const Matrix k3 = field(x + 0.5 * h * k2, t, labels);
        t.setConstant(t0 + h);
        const Matrix k4 = field(x + h * k3, t, labels);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                if (!x.col(c).allFinite()) throw IntegrationError(k + 1, static_cast<std::size_t>(c));
            }
        }
    }
    return x;
}

Vector integrate_flow(const VectorField& field, const Vector& x0, const Vector& label, std::size_t steps) {
    return integrate_flow(field, Matrix(x0), Matrix(label), steps).col(0);
}

bool DecodedDesign::any_clamped() const {
    return std::any_of(clamped.begin(), clamped.end(), [](bool b) { return b; });
}

DecodedDesign decode_design(const std::array<double, kDesignDims>& x, const data::NormStats& norm) {
    auto raw = data::invert_design(x, norm);
    DecodedDesign out;
    std::array<double, kDesignDims> fixed{};
    for (std::size_t k = 0; k < kDesignDims; ++k) {
        const auto& range = geometry::kDesignRanges[k];
        double v = std::isfinite(raw[k]) ? raw[k] : range.lo;
        if (k == 0) v = std::round(v);
        v = std::clamp(v, range.lo, range.hi);
        fixed[k] = v;
        out.clamped[k] = !(std::abs(v - raw[k]) <= kClampTolerance);
    }
    out.design = geometry::from_array(fixed);
    return out;
}

void TargetSpec::validate() const {
    if (!eta_star && !j_star && !kt_star) throw DomainError("target spec: at least one label must be set");
    for (const auto& v : as_array()) {
        if (v && !std::isfinite(*v)) throw DomainError("target spec: label values must be finite");
    }
}

GenerationReport sample_designs(const CfmModel& model, const TargetSpec& spec, std::size_t n, std::size_t steps,
                                std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw DomainError("sample_designs: n must be >= 1");
    std::vector<std::string> warnings;
    const auto targets = spec.as_array();
    for (std::size_t k = 0; k < kLabelDims; ++k) {
        if (targets[k] && !model.envelope.contains(k, *targets[k])) {
            std::ostringstream os;
            os << hydro::kLabelNames[k] << " = " << *targets[k] << " outside training envelope ["
               << model.envelope.lo[k] << ", " << model.envelope.hi[k] << "]";
            warnings.push_back(os.str());
        }
    }
    std::mt19937_64 rng(seed);
    std::vector<hydro::LabelVector> conditions;
    conditions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, kLabelDims> l{};
        for (std::size_t k = 0; k < kLabelDims; ++k) {
            if (targets[k]) {
                l[k] = *targets[k];
            } else {
                std::uniform_real_distribution<double> u(model.envelope.lo[k], model.envelope.hi[k]);
                l[k] = u(rng);
            }
        }
        conditions.push_back(hydro::label_from_array(l));
    }
    auto report = generate(model, conditions, steps, rng);
    report.warnings = std::move(warnings);
    return report;
}

GenerationReport sample_for_labels(const CfmModel& model, const std::vector<hydro::LabelVector>& conditions,
                                   std::size_t steps, std::uint64_t seed) {
    if (conditions.empty()) throw DomainError("sample_for_labels: no conditions");
    std::mt19937_64 rng(seed);
    return generate(model, conditions, steps, rng);
}

std::string to_csv(const GenerationReport& report) {
    std::string out = "n_blades,P,w_rp,w_c,w_rc,camber,cond_eta_star,cond_j_star,cond_kt_star,clamped\n";
    for (std::size_t i = 0; i < report.designs.size(); ++i) {
        const auto& p = report.designs[i];
        const auto& c = report.sampled_conditions[i];
        out += std::to_string(p.n_blades);
        for (double v : {p.pitch_nominal, p.w_rp, p.w_c, p.w_rc, p.camber, c.eta_star, c.j_star, c.kt_star}) {
            out += ',';
            out += csv::format_number(v);
        }
        out += ',';
        bool first = true;
        for (std::size_t k = 0; k < kDesignDims; ++k) {
            if (!report.clamped[i][k]) continue;
            if (!first) out += '|';
            out += geometry::kDesignRanges[k].name;
            first = false;
        }
        out += '\n';
    }
    return out;
}

nlohmann::json to_json(const LabelEnvelope& e) { return {{"lo", e.lo}, {"hi", e.hi}}; }

LabelEnvelope envelope_from_json(const nlohmann::json& j) {
    LabelEnvelope e;
    e.lo = j.at("lo").get<std::array<double, kLabelDims>>();
    e.hi = j.at("hi").get<std::array<double, kLabelDims>>();
    return e;
}

nlohmann::json to_json(const CfmModel& m) {
    return {{"format", "propforge-cfm"},
            {"version", kCheckpointVersion},
            {"field", nn::to_json(m.field)},
            {"norm", data::to_json(m.norm)},
            {"label_envelope", to_json(m.envelope)}};
}

CfmModel cfm_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "propforge-cfm") throw ParseError("not a cfm checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw ParseError("unsupported cfm checkpoint version");
        CfmModel m{nn::mlp_from_json(j.at("field")), data::norm_from_json(j.at("norm")),
                   envelope_from_json(j.at("label_envelope"))};
        const auto& c = m.field.config();
        if (c.input_dim != kFieldInputDim || c.output_dim != kDesignDims) {
            throw ParseError("cfm checkpoint: field network must map 10 inputs to 6 outputs");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("cfm checkpoint: ") + e.what());
    }
}

void save_cfm(const CfmModel& m, const std::filesystem::path& path) {
    data::write_text_file(path, to_json(m).dump());
}

CfmModel load_cfm(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingArtifactError("cfm checkpoint not found: " + path.string());
    return cfm_from_json(nlohmann::json::parse(data::read_text_file(path)));
}

}  // namespace propforge::cfm

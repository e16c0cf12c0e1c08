#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "propforge/cfm.hpp"
#include "propforge/error.hpp"

using namespace propforge;
using namespace propforge::cfm;

namespace {

const data::LabeledDataset& dataset() {
    static const data::LabeledDataset d = data::generate_dataset(120, 21);
    return d;
}

CfmConfig tiny_config(std::size_t epochs) { return CfmConfig{2, 32, nn::TrainSchedule{epochs, 40, 2e-3, epochs, 0.1}}; }

data::NormStats unit_norm() {
    data::NormStats s;
    s.design_mean = {3.5, 1.0, 0.7, 0.75, 0.65, 0.025};
    s.design_std = {1.0, 0.25, 0.1, 0.1, 0.1, 0.01};
    s.label_mean = {0.7, 0.9, 0.1};
    s.label_std = {0.1, 0.3, 0.05};
    return s;
}

}  // namespace

TEST_CASE("interpolation endpoints are exact") {
    std::mt19937_64 rng(1);
    const Matrix x0 = Matrix::Random(6, 7), x1 = Matrix::Random(6, 7);
    CHECK(interpolate_path(x0, x1, Vector::Zero(7)) == x0);
    CHECK(interpolate_path(x0, x1, Vector::Ones(7)) == x1);
    const Matrix mid = interpolate_path(x0, x1, Vector::Constant(7, 0.25));
    CHECK((mid - (0.25 * x1 + 0.75 * x0)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("loss is zero for the exact velocity and mean squared norm for a zero field") {
    std::mt19937_64 rng(4);
    const Matrix x1 = Matrix::Random(6, 16), labels = Matrix::Random(3, 16);
    const auto batch = draw_cfm_batch(x1, labels, rng);
    CHECK(batch.velocity == batch.x1 - batch.x0);
    const Matrix v = batch.velocity;
    const VectorField oracle = [&](const Matrix&, const Vector&, const Matrix&) { return v; };
    CHECK(cfm_loss(oracle, batch) == 0.0);
    const VectorField zero = [](const Matrix& x, const Vector&, const Matrix&) { return Matrix::Zero(x.rows(), x.cols()); };
    const double expected = v.colwise().squaredNorm().mean();
    CHECK(cfm_loss(zero, batch) == doctest::Approx(expected).epsilon(1e-14));
    for (Eigen::Index c = 0; c < 16; ++c) {
        CHECK(batch.t(c) >= 0.0);
        CHECK(batch.t(c) <= 1.0);
    }
}

TEST_CASE("field inputs stack state, time and label") {
    const Matrix x = Matrix::Random(6, 3), l = Matrix::Random(3, 3);
    const Vector t = Vector::LinSpaced(3, 0.1, 0.3);
    const Matrix in = field_inputs(x, t, l);
    REQUIRE(in.rows() == 10);
    CHECK(in.topRows(6) == x);
    CHECK(in.row(6).transpose() == t);
    CHECK(in.bottomRows(3) == l);
}

TEST_CASE("RK4: zero, constant and linear fields") {
    const Matrix x0 = Matrix::Random(6, 5), l = Matrix::Zero(3, 5);
    const VectorField zero = [](const Matrix& x, const Vector&, const Matrix&) { return Matrix::Zero(x.rows(), x.cols()); };
    CHECK(integrate_flow(zero, x0, l, 100) == x0);
    const Matrix c = Matrix::Random(6, 5);
    const VectorField constant = [&](const Matrix&, const Vector&, const Matrix&) { return c; };
    CHECK((integrate_flow(constant, x0, l, 100) - (x0 + c)).cwiseAbs().maxCoeff() < 1e-12);
    const VectorField linear = [](const Matrix& x, const Vector&, const Matrix&) { return x; };
    const Matrix out = integrate_flow(linear, x0, l, 100);
    const Matrix want = std::exp(1.0) * x0;
    CHECK(((out - want).cwiseAbs().array() / want.cwiseAbs().array()).maxCoeff() < 1e-8);
}

TEST_CASE("RK4 along the straight-line oracle lands on x1") {
    Vector x0(6), x1(6);
    x0 << 0.1, -0.4, 1.2, 0.0, -2.0, 0.5;
    x1 << 1.0, 0.3, -0.7, 0.9, 0.4, -1.1;
    const Vector diff = x1 - x0;
    const VectorField oracle = [&](const Matrix& x, const Vector&, const Matrix&) {
        return Matrix(diff.replicate(1, x.cols()));
    };
    const Vector out = integrate_flow(oracle, x0, Vector::Zero(3), 100);
    CHECK((out - x1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-finite states raise an integration error") {
    const VectorField blowup = [](const Matrix& x, const Vector&, const Matrix&) {
        return Matrix(x.array() * 1e300);
    };
    CHECK_THROWS_AS(integrate_flow(blowup, Matrix(Matrix::Ones(6, 2)), Matrix(Matrix::Zero(3, 2)), 50), IntegrationError);
}

TEST_CASE("decoding rounds, clamps and flags") {
    const auto s = unit_norm();
    auto encode = [&](std::array<double, 6> raw) { return data::normalize_design(raw, s); };
    auto d = decode_design(encode({3.4, 1.0, 0.7, 0.75, 0.65, 0.02}), s);
    CHECK(d.design.n_blades == 3);
    CHECK(d.clamped[0]);
    CHECK(d.any_clamped());
    d = decode_design(encode({4.0, 1.7, 0.7, 0.75, 0.65, 0.02}), s);
    CHECK(d.design.pitch_nominal == 1.5);
    CHECK(d.clamped[1]);
    CHECK_FALSE(d.clamped[0]);
    d = decode_design(encode({4.0, 1.1, 0.7, 0.75, 0.65, 0.02}), s);
    CHECK_FALSE(d.any_clamped());
    CHECK(d.design.pitch_nominal == doctest::Approx(1.1).epsilon(1e-12));
    d = decode_design(encode({9.0, -3.0, 0.0, 2.0, 0.0, 0.3}), s);
    CHECK(geometry::is_valid(d.design));
}

TEST_CASE("target spec needs at least one label") {
    CHECK_THROWS_AS(TargetSpec{}.validate(), DomainError);
    CHECK_NOTHROW(TargetSpec{std::nullopt, 1.0, std::nullopt}.validate());
}

TEST_CASE("training is deterministic and the loss falls") {
    const auto a = train_cfm(dataset(), tiny_config(60), 3);
    const auto b = train_cfm(dataset(), tiny_config(60), 3);
    CHECK(a.loss_history == b.loss_history);
    double first = 0, last = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        first += a.loss_history[i];
        last += a.loss_history[a.loss_history.size() - 10 + i];
    }
    CHECK(last < first);
}

TEST_CASE("sampling: box, determinism, free labels and warnings") {
    const auto model = train_cfm(dataset(), tiny_config(30), 5).model;
    const auto r1 = sample_designs(model, TargetSpec{0.8, 1.0, 0.1}, 200, 20, 9);
    const auto r2 = sample_designs(model, TargetSpec{0.8, 1.0, 0.1}, 200, 20, 9);
    REQUIRE(r1.designs.size() == 200);
    CHECK(r1.designs == r2.designs);
    for (const auto& d : r1.designs) CHECK(geometry::is_valid(d));
    for (const auto& c : r1.sampled_conditions) CHECK(c == hydro::LabelVector{0.8, 1.0, 0.1});

    const auto free_eta = sample_designs(model, TargetSpec{std::nullopt, 1.209, 0.1402}, 300, 10, 2);
    double lo = 1, hi = 0;
    for (const auto& c : free_eta.sampled_conditions) {
        CHECK(c.j_star == 1.209);
        CHECK(model.envelope.contains(0, c.eta_star));
        lo = std::min(lo, c.eta_star);
        hi = std::max(hi, c.eta_star);
    }
    const double span = model.envelope.hi[0] - model.envelope.lo[0];
    CHECK(hi - lo > 0.8 * span);

    const auto far = sample_designs(model, TargetSpec{0.99, std::nullopt, std::nullopt}, 5, 10, 2);
    REQUIRE_FALSE(far.warnings.empty());
    CHECK(far.warnings.front().find("eta_star") != std::string::npos);
}

TEST_CASE("report CSV layout") {
    GenerationReport r;
    r.designs = {geometry::DesignVector{}};
    std::array<bool, 6> flags{};
    flags[1] = flags[5] = true;
    r.clamped = {flags};
    r.sampled_conditions = {{0.8, 1.0, 0.1}};
    const auto text = to_csv(r);
    CHECK(text.substr(0, text.find('\n')) ==
          "n_blades,P,w_rp,w_c,w_rc,camber,cond_eta_star,cond_j_star,cond_kt_star,clamped");
    CHECK(text.find("P|camber") != std::string::npos);
}

TEST_CASE("checkpoint round trip and missing file") {
    const auto dir = std::filesystem::temp_directory_path() / "propforge_test_cfm";
    std::filesystem::remove_all(dir);
    const auto model = untrained_cfm(dataset(), tiny_config(1), 1);
    save_cfm(model, dir / "cfm.json");
    const auto back = load_cfm(dir / "cfm.json");
    CHECK(back.norm == model.norm);
    const auto a = sample_designs(model, TargetSpec{0.7, 0.9, 0.1}, 10, 5, 1);
    const auto b = sample_designs(back, TargetSpec{0.7, 0.9, 0.1}, 10, 5, 1);
    CHECK(a.designs == b.designs);
    CHECK_THROWS_WITH_AS(load_cfm(dir / "nope.json"), doctest::Contains("cfm checkpoint not found"),
                         MissingArtifactError);
    std::filesystem::remove_all(dir);
}

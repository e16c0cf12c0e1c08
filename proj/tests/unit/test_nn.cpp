#include <doctest.h>

#include <cmath>
#include <random>

#include "propforge/error.hpp"
#include "propforge/nn/mlp.hpp"

using namespace propforge;
using namespace propforge::nn;

namespace {

MlpModel scalar_linear(double w) {
    DenseLayer l{Matrix::Constant(1, 1, w), Vector::Zero(1)};
    return MlpModel(MlpConfig{1, 1, 0, 1, 0}, {l});
}

void line_data(Matrix& x, Matrix& t) {
    x.resize(1, 100);
    t.resize(1, 100);
    for (int i = 0; i < 100; ++i) {
        x(0, i) = -1.0 + 2.0 * i / 99.0;
        t(0, i) = 2.0 * x(0, i) + 1.0;
    }
}

}  // namespace

TEST_CASE("zero weights give zero output") {
    MlpModel m(MlpConfig{3, 2, 2, 5, 1});
    for (auto& l : m.layers()) {
        l.weight.setZero();
        l.bias.setZero();
    }
    CHECK(m.forward(Vector(Vector::Constant(3, 0.7))).isZero());
}

TEST_CASE("single hidden unit computes ReLU") {
    const DenseLayer hidden{Matrix::Constant(1, 1, 1.0), Vector::Zero(1)};
    const DenseLayer out{Matrix::Constant(1, 1, 1.0), Vector::Zero(1)};
    const MlpModel m(MlpConfig{1, 1, 1, 1, 0}, {hidden, out});
    CHECK(m.forward(Vector(Vector::Constant(1, -1.0)))(0) == 0.0);
    CHECK(m.forward(Vector(Vector::Constant(1, 2.0)))(0) == 2.0);
}

TEST_CASE("forward matches a scalar recomputation") {
    const MlpModel m(MlpConfig{4, 3, 2, 6, 21});
    Vector x(4);
    x << 0.3, -1.2, 0.8, 2.0;
    std::vector<double> a(x.data(), x.data() + 4);
    const auto& layers = m.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto& l = layers[li];
        std::vector<double> next(static_cast<std::size_t>(l.weight.rows()));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            double s = l.bias(r);
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) s += l.weight(r, c) * a[static_cast<std::size_t>(c)];
            next[static_cast<std::size_t>(r)] = li + 1 < layers.size() ? std::max(0.0, s) : s;
        }
        a = next;
    }
    const Vector y = m.forward(x);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(y(k) - a[static_cast<std::size_t>(k)]) <= 1e-12);
}

TEST_CASE("initialization bounds and parameter count") {
    const MlpModel m(MlpConfig{10, 6, 3, 20, 4});
    CHECK(m.parameter_count() == 10 * 20 + 20 + 2 * (20 * 20 + 20) + 20 * 6 + 6);
    for (const auto& l : m.layers()) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
        CHECK(l.weight.cwiseAbs().maxCoeff() <= bound);
        CHECK(l.bias.isZero());
    }
    CHECK_THROWS_AS(MlpModel(MlpConfig{0, 1, 1, 1, 0}), DomainError);
    CHECK_THROWS_AS(MlpModel(MlpConfig{1, 1, 1, 0, 0}), DomainError);
}

TEST_CASE("loss and gradients vanish at the targets") {
    const MlpModel m(MlpConfig{3, 2, 2, 8, 9});
    const Matrix x = Matrix::Random(3, 5);
    const auto g = backward(m, x, m.forward(x));
    CHECK(g.loss == 0.0);
    for (const auto& l : g.layers) {
        CHECK(l.weight.isZero());
        CHECK(l.bias.isZero());
    }
}

TEST_CASE("one-parameter linear model") {
    const auto m = scalar_linear(2.0);
    const auto g = backward(m, Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 0.0));
    CHECK(g.loss == doctest::Approx(4.0));
    CHECK(g.layers[0].weight(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("analytic gradients agree with central differences") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const MlpConfig c{1 + rng() % 6, 1 + rng() % 4, 1 + rng() % 3, 2 + rng() % 12, rng()};
        // Random biases keep pre-activations off the ReLU kink, where a
        // zero-initialized layer behind a dead one would otherwise sit.
        MlpModel m(c);
        for (auto& l : m.layers()) l.bias = 0.1 * Vector::Random(l.bias.size());
        Vector x = Vector::Random(static_cast<Eigen::Index>(c.input_dim));
        Vector t = Vector::Random(static_cast<Eigen::Index>(c.output_dim));
        CHECK(grad_check(m, x, t, 1e-5) < 1e-4);
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    auto m = scalar_linear(0.5);
    auto st = AdamState::for_model(m);
    Gradients g{{DenseLayer{Matrix::Zero(1, 1), Vector::Zero(1)}}, 0.0};
    adam_step(st, m, g, 0.1);
    CHECK(m.layers()[0].weight(0, 0) == 0.5);
}

TEST_CASE("adam: first step moves by lr") {
    auto m = scalar_linear(0.0);
    auto st = AdamState::for_model(m);
    Gradients g{{DenseLayer{Matrix::Constant(1, 1, 1.0), Vector::Zero(1)}}, 0.0};
    adam_step(st, m, g, 0.001);
    CHECK(m.layers()[0].weight(0, 0) == doctest::Approx(-0.001 / (1 + 1e-8)).epsilon(1e-12));
    CHECK(st.step == 1);
}

TEST_CASE("adam: minimizing w^2 from 1") {
    auto m = scalar_linear(1.0);
    auto st = AdamState::for_model(m);
    for (int i = 0; i < 100; ++i) {
        const double w = m.layers()[0].weight(0, 0);
        Gradients g{{DenseLayer{Matrix::Constant(1, 1, 2 * w), Vector::Zero(1)}}, w * w};
        adam_step(st, m, g, 0.1);
    }
    const double w = m.layers()[0].weight(0, 0);
    CHECK(std::abs(w) < 0.05);
    CHECK(w == doctest::Approx(0.002936675681).epsilon(1e-6));
}

TEST_CASE("schedule validation and learning-rate drop") {
    const TrainSchedule s{10, 4, 1e-3, 5, 0.1};
    CHECK(s.learning_rate(4) == doctest::Approx(1e-3));
    CHECK(s.learning_rate(5) == doctest::Approx(1e-4));
    CHECK_THROWS_AS((TrainSchedule{10, 4, 1e-3, 11, 0.1}.validate()), DomainError);
    CHECK_THROWS_AS((TrainSchedule{10, 0, 1e-3, 5, 0.1}.validate()), DomainError);
}

TEST_CASE("training fits a line, decreases and is deterministic") {
    Matrix x, t;
    line_data(x, t);
    const TrainSchedule s{200, 20, 1e-2, 150, 0.1};
    MlpModel a(MlpConfig{1, 1, 2, 16, 3});
    const auto ha = train(a, x, t, s, 5);
    REQUIRE(ha.size() == 200);
    CHECK(ha.back() < 1e-3);
    for (std::size_t w = 10; w + 10 <= ha.size(); w += 10) {
        double prev = 0, cur = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            prev += ha[w - 10 + i];
            cur += ha[w + i];
        }
        CHECK(cur <= prev * 1.05);
    }
    MlpModel b(MlpConfig{1, 1, 2, 16, 3});
    CHECK(train(b, x, t, s, 5) == ha);
}

TEST_CASE("batch size larger than the data is capped") {
    Matrix x, t;
    line_data(x, t);
    MlpModel m(MlpConfig{1, 1, 1, 4, 3});
    CHECK(train(m, x, t, TrainSchedule{3, 1000, 1e-3, 3, 0.1}, 1).size() == 3);
}

TEST_CASE("scaling the targets scales a linear fit") {
    Matrix x, t;
    line_data(x, t);
    const TrainSchedule s{3000, 100, 1e-2, 2000, 0.1};
    MlpModel a(MlpConfig{1, 1, 0, 1, 3}), b(MlpConfig{1, 1, 0, 1, 3});
    train(a, x, t, s, 2);
    train(b, x, 3.0 * t, s, 2);
    const Matrix ya = a.forward(x), yb = b.forward(x);
    CHECK((yb - 3.0 * ya).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("model JSON round trip") {
    const MlpModel m(MlpConfig{4, 2, 2, 7, 13});
    const auto back = mlp_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.config() == m.config());
    const Matrix x = Matrix::Random(4, 3);
    CHECK((back.forward(x) - m.forward(x)).cwiseAbs().maxCoeff() == 0.0);
}

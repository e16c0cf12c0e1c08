#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>

#include "propforge/error.hpp"
#include "propforge/evaluation.hpp"
#include "propforge/surrogate.hpp"

using namespace propforge;

namespace {

const data::LabeledDataset& dataset() {
    static const data::LabeledDataset d = data::generate_dataset(200, 31);
    return d;
}

surrogate::SurrogateConfig small_surrogate() { return {3, 64, nn::TrainSchedule{200, 50, 2e-3, 150, 0.1}}; }

const surrogate::SurrogateTraining& trained() {
    static const auto t = surrogate::train_surrogates(dataset(), small_surrogate(), 4);
    return t;
}

}  // namespace

TEST_CASE("mre examples and properties") {
    const std::vector<double> t{1, 2}, p{1.1, 1.8};
    CHECK(surrogate::mre(t, p) == doctest::Approx(0.10).epsilon(1e-12));
    CHECK(surrogate::mre(t, t) == 0.0);
    CHECK(surrogate::mre(std::vector<double>{0.5}, std::vector<double>{0.45}) == doctest::Approx(0.10).epsilon(1e-12));
    const std::vector<double> t3{3, 6}, p3{3.3, 5.4};
    CHECK(surrogate::mre(t3, p3) == doctest::Approx(surrogate::mre(t, p)).epsilon(1e-12));
    CHECK_THROWS_AS(surrogate::mre(std::vector<double>{}, std::vector<double>{}), DomainError);
    CHECK_THROWS_AS(surrogate::mre(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}), DomainError);
    CHECK_THROWS_AS(surrogate::mre(std::vector<double>{0.0}, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("relative improvement") {
    CHECK(eval::relative_improvement(0.08, 0.10) == doctest::Approx(-20.0).epsilon(1e-12));
    CHECK(eval::relative_improvement(0.1, 0.1) == 0.0);
    CHECK(eval::relative_improvement(0.0625, 0.1000) == doctest::Approx(-37.5).epsilon(1e-12));
    for (double a : {0.01, 0.2, 0.7}) {
        for (double b : {0.05, 0.3}) CHECK(eval::relative_improvement(a, b) == doctest::Approx(-100.0 * (b - a) / b));
    }
    CHECK_THROWS_AS(eval::relative_improvement(0.1, 0.0), DomainError);
}

TEST_CASE("validation flags") {
    const std::vector<hydro::LabelVector> preds{{0.8, 1.0, 0.1}, {0.7, 1.03, 0.1}};
    const cfm::TargetSpec spec{std::nullopt, 1.0, 0.1};
    CHECK(surrogate::validate_predictions(preds, spec, 0.02) == std::vector<bool>{true, false});
    CHECK(surrogate::validate_predictions(preds, spec, std::numeric_limits<double>::infinity()) ==
          std::vector<bool>{true, true});
    CHECK(surrogate::validate_predictions(preds, cfm::TargetSpec{0.8, 1.0, 0.1}, 1e-12)[0]);
}

TEST_CASE("surrogate training reduces the loss tenfold and is deterministic") {
    const auto& t = trained();
    for (const auto& h : t.loss_history) CHECK(h.back() * 10.0 <= h.front());
    const auto again = surrogate::train_surrogates(dataset(), small_surrogate(), 4);
    CHECK(again.loss_history == t.loss_history);
}

TEST_CASE("surrogate predictions: envelope, repeatability and speed") {
    const auto designs = data::lhs_sample(1000, 8);
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = surrogate::predict_labels(trained().set, designs);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 1.0);
    for (const auto& l : p) {
        CHECK(l.eta_star > 0.35 * 0.8);
        CHECK(l.eta_star < 0.95 * 1.2);
        CHECK(l.j_star > 0.25 * 0.8);
        CHECK(l.j_star < 1.6 * 1.2);
        CHECK(l.kt_star > -0.3 * 0.2);
        CHECK(l.kt_star < 0.30 * 1.2);
    }
    CHECK(surrogate::predict_labels(trained().set, designs) == p);
}

TEST_CASE("surrogate checkpoints round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "propforge_test_sur";
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(surrogate::load_surrogates(dir), MissingArtifactError);
    surrogate::save_surrogates(trained().set, dir);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::filesystem::exists(surrogate::checkpoint_path(dir, k)));
    const auto back = surrogate::load_surrogates(dir);
    const geometry::DesignVector p{3, 1.2, 0.6, 0.8, 0.6, 0.02};
    CHECK(surrogate::predict_labels(back, p) == surrogate::predict_labels(trained().set, p));
    std::filesystem::remove_all(dir);
}

TEST_CASE("augmented sets carry pseudo provenance and valid labels") {
    const auto aug = eval::build_augmented(trained().set, 500, 3);
    REQUIRE(aug.size() == 500);
    for (const auto& r : aug.records) {
        CHECK(r.provenance == data::Provenance::pseudo);
        CHECK_NOTHROW(data::validate_labels(r.labels));
        CHECK(geometry::is_valid(r.design));
    }
    CHECK(data::to_csv(eval::build_augmented(trained().set, 500, 3)) == data::to_csv(aug));
}

TEST_CASE("histograms") {
    const auto h = eval::Histogram::of("x", {0.0, 0.1, 0.5, 0.99, 1.0, 2.0, -1.0}, 4, 0.0, 1.0);
    CHECK(h.counts == std::vector<std::size_t>{3, 0, 1, 3});
    CHECK_THROWS_AS(eval::Histogram::of("x", {}, 0, 0.0, 1.0), DomainError);
}

TEST_CASE("accuracy and diversity reports") {
    const auto [train, test] = data::split(dataset(), 170);
    const auto model = cfm::train_cfm(train, cfm::CfmConfig{2, 32, nn::TrainSchedule{20, 50, 2e-3, 20, 0.1}}, 1).model;
    const auto r = eval::run_accuracy_study(model, test, 10, 2);
    CHECK(r.requested == 30);
    CHECK(r.valid <= r.requested);
    CHECK(r.designs.size() == 30);
    for (double m : r.mre) {
        if (r.valid > 0) CHECK(m >= 0.0);
    }
    CHECK(r.design_histograms.size() == 6);
    CHECK(r.label_histograms.size() == 3);
    const auto again = eval::run_accuracy_study(model, test, 10, 2);
    CHECK(eval::to_json(again) == eval::to_json(r));

    const auto d = eval::run_diversity_study(model, cfm::TargetSpec{0.8, 1.0, 0.1}, 40, 10, 3);
    CHECK(d.requested == 40);
    const auto j = eval::to_json(d);
    CHECK(j.contains("within_tolerance"));
    CHECK(eval::parity_svg(d).find("<svg") == 0);
    CHECK(eval::histograms_svg(d.design_histograms, "t").find("</svg>") != std::string::npos);
}

TEST_CASE("augmentation table layout") {
    const auto base = data::take(dataset(), 120);
    const auto test = data::take(data::shuffled(dataset(), 1), 20);
    eval::AugmentationConfig cfg{{30, 60},
                                 {100, 200},
                                 {1, 16, nn::TrainSchedule{20, 50, 2e-3, 20, 0.1}},
                                 {1, 16, nn::TrainSchedule{5, 50, 2e-3, 5, 0.1}},
                                 5,
                                 3};
    const auto t = eval::run_augmentation_study(base, test, cfg);
    REQUIRE(t.base_mre.size() == 2);
    REQUIRE(t.aug_mre.size() == 2);
    CHECK(t.aug_mre[0].size() == 2);
    const auto csv = eval::to_csv(t);
    CHECK(csv.substr(0, csv.find('\n')).find("kt_star@200") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(eval::mre_vs_d_svg(t).find("<svg") == 0);
    cfg.d_list = {500};
    CHECK_THROWS_AS(eval::run_augmentation_study(base, test, cfg), DomainError);
}

#include <doctest.h>

#include "propforge/error.hpp"
#include "propforge/plot.hpp"
#include "propforge/profile.hpp"

using namespace propforge;

TEST_CASE("full profile carries the full-scale hyperparameters") {
    const auto p = Profile::full();
    CHECK(p.dataset_size == 3000);
    CHECK(p.train_size == 2000);
    CHECK(p.cfm.hidden_layers == 8);
    CHECK(p.cfm.hidden_width == 500);
    CHECK(p.cfm.schedule.epochs == 10000);
    CHECK(p.cfm.schedule.batch_size == 500);
    CHECK(p.cfm.schedule.lr_initial == 1e-3);
    CHECK(p.cfm.schedule.lr_drop_epoch == 5000);
    CHECK(p.cfm.schedule.lr_drop_factor == 0.1);
    CHECK(p.surrogate.hidden_layers == 6);
    CHECK(p.surrogate.hidden_width == 500);
    CHECK(p.surrogate.schedule.epochs == 500);
    CHECK(p.surrogate.schedule.lr_drop_epoch == 250);
    CHECK(p.integration_steps == 100);
    CHECK(p.augmentation_d_list == std::vector<std::size_t>{100, 200, 300, 400, 500, 1000, 1500, 2000});
    CHECK(p.augmentation_sizes == std::vector<std::size_t>{10000, 100000});
    CHECK(p.diversity_target == hydro::LabelVector{0.8, 1.0, 0.1});
}

TEST_CASE("desk profile sweep settings") {
    const auto p = Profile::desk();
    CHECK(p.dataset_size == 700);
    CHECK(p.train_size == 500);
    CHECK(p.augmentation_d_list == std::vector<std::size_t>{50, 100, 200});
    CHECK(p.augmentation_sizes == std::vector<std::size_t>{2000});
    CHECK(p.augmentation_seeds == 3);
    CHECK_THROWS_AS(Profile::named("huge"), DomainError);
}

TEST_CASE("config overrides") {
    auto p = Profile::desk();
    const auto kv = parse_key_values(
        "# comment\n[cfm]\ncfm.epochs = 300  # inline\ncfm.lr_drop_epoch = 100\n"
        "augmentation.d_list = [20, 40]\ndiversity.eta_star = 0.75\nseed = 11\n");
    apply_overrides(p, kv);
    CHECK(p.cfm.schedule.epochs == 300);
    CHECK(p.cfm.schedule.lr_drop_epoch == 100);
    CHECK(p.augmentation_d_list == std::vector<std::size_t>{20, 40});
    CHECK(p.diversity_target.eta_star == 0.75);
    CHECK(p.seed == 11);
    CHECK_THROWS_WITH_AS(apply_overrides(p, {{"cfm.widht", "3"}}), doctest::Contains("cfm.widht"), ParseError);
    CHECK_THROWS_AS(apply_overrides(p, {{"cfm.epochs", "many"}}), ParseError);
    CHECK_THROWS_AS(apply_overrides(p, {{"cfm.lr_drop_epoch", "100000"}}), DomainError);
    try {
        parse_key_values("a = 1\nnot a pair\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    const auto j = to_json(Profile::full());
    CHECK(j["cfm"]["schedule"]["epochs"] == 10000);
}

TEST_CASE("svg output is well formed") {
    plot::Panel p{"t <1>", "x", "y", {plot::Series{"a", {1, 2, 3}, {1, 4, 9}}}, true, std::make_pair(2.0, 4.0), false};
    const auto s = plot::render(p);
    CHECK(s.find("<svg") == 0);
    CHECK(s.find("t &lt;1&gt;") != std::string::npos);
    CHECK(s.find("polyline") != std::string::npos);
    const auto b = plot::render(plot::Bars{"h", 0, 1, {1, 2, 3}});
    CHECK(std::count(b.begin(), b.end(), '\n') > 5);
    const auto g = plot::grid({s, b}, 2, "both");
    CHECK(g.find("translate(360,30)") != std::string::npos);
    CHECK(plot::render(plot::Panel{"empty", "x", "y", {}, false, std::nullopt, false}).find("</svg>") != std::string::npos);
}

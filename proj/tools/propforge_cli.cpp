// propforge: command-line driver for data generation, training, generation,
// studies, exports and the HTTP service.
//
// Artifacts live under the data dir (--data-dir, else $PROPFORGE_DATA_DIR,
// else ./propforge-data). Every subcommand prints one JSON summary line on
// stdout; progress goes to stderr. Exit codes: 0 ok, 1 user error, 2 internal.

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "propforge/cfm.hpp"
#include "propforge/csv.hpp"
#include "propforge/dataset.hpp"
#include "propforge/error.hpp"
#include "propforge/evaluation.hpp"
#include "propforge/geometry.hpp"
#include "propforge/hydro.hpp"
#include "propforge/plot.hpp"
#include "propforge/profile.hpp"
#include "propforge/service.hpp"
#include "propforge/surrogate.hpp"

namespace fs = std::filesystem;
using namespace propforge;

namespace {

struct Globals {
    std::string profile = "desk";
    std::string config;
    std::string data_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

struct Context {
    Profile profile;
    fs::path dir;
    bool quiet = false;

    void progress(const std::string& m) const {
        if (!quiet) std::cerr << "[propforge] " << m << std::endl;
    }
    fs::path path(const std::string& name) const { return dir / name; }
};

Context make_context(const Globals& g) {
    Context c;
    c.profile = Profile::named(g.profile);
    if (!g.config.empty()) apply_overrides(c.profile, parse_key_values(data::read_text_file(g.config)));
    if (g.seed) c.profile.seed = *g.seed;
    c.dir = g.data_dir.empty() ? data::default_data_dir() : fs::path(g.data_dir);
    c.quiet = g.quiet;
    return c;
}

void summary(nlohmann::json j) { std::cout << j.dump() << std::endl; }

nn::EpochCallback epoch_logger(const Context& c, const std::string& what, std::size_t epochs) {
    const std::size_t every = std::max<std::size_t>(1, epochs / 10);
    return [&c, what, epochs, every](std::size_t epoch, double loss) {
        if ((epoch + 1) % every == 0 || epoch + 1 == epochs) {
            c.progress(what + " epoch " + std::to_string(epoch + 1) + "/" + std::to_string(epochs) +
                       " loss " + std::to_string(loss));
        }
    };
}

nlohmann::json labels_or_null(const std::array<double, hydro::kLabelDims>& v) {
    nlohmann::json j;
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        j[std::string(hydro::kLabelNames[k])] = std::isfinite(v[k]) ? nlohmann::json(v[k]) : nlohmann::json(nullptr);
    }
    return j;
}

geometry::DesignVector read_design_file(const std::string& file) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(data::read_text_file(file));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(file + ": " + e.what());
    }
    if (j.is_object() && j.contains("design")) j = j["design"];
    return geometry::design_from_json(j);
}

// --- subcommands -----------------------------------------------------------

void cmd_gen_data(const Context& c, std::size_t n, std::optional<std::uint64_t> seed) {
    const std::uint64_t s = seed.value_or(c.profile.seed);
    const std::size_t total = n > 0 ? n : c.profile.dataset_size;
    std::size_t last_pct = 0;
    auto d = data::generate_dataset(
        total, s, [&](const std::string& w) { c.progress("warning: " + w); },
        [&](std::size_t done, std::size_t all) {
            const std::size_t pct = 100 * done / std::max<std::size_t>(1, all);
            if (pct >= last_pct + 10) {
                last_pct = pct;
                c.progress("simulated " + std::to_string(done) + "/" + std::to_string(all));
            }
        });
    const auto out = c.path("dataset.csv");
    data::save_dataset(d, out);
    summary({{"command", "gen-data"}, {"records", d.size()}, {"seed", s}, {"path", out.string()}});
}

void cmd_split(const Context& c, std::size_t n_train) {
    const auto d = data::load_dataset(c.path("dataset.csv"));
    const std::size_t k = n_train > 0 ? n_train : c.profile.train_size;
    auto [train, test] = data::split(d, k);
    data::save_dataset(train, c.path("train.csv"));
    data::save_dataset(test, c.path("test.csv"));
    summary({{"command", "split"},
             {"train", train.size()},
             {"test", test.size()},
             {"train_path", c.path("train.csv").string()},
             {"test_path", c.path("test.csv").string()}});
}

void cmd_train_surrogates(const Context& c) {
    const auto train = data::load_dataset(c.path("train.csv"));
    const auto& cfg = c.profile.surrogate;
    c.progress("training surrogates on " + std::to_string(train.size()) + " records");
    const auto t = surrogate::train_surrogates(train, cfg, c.profile.seed,
                                               epoch_logger(c, "surrogate", cfg.schedule.epochs));
    surrogate::save_surrogates(t.set, c.dir);
    nlohmann::json final_loss;
    for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
        final_loss[std::string(hydro::kLabelNames[k])] = t.loss_history[k].empty() ? 0.0 : t.loss_history[k].back();
    }
    nlohmann::json test_mre = nullptr;
    if (fs::exists(c.path("test.csv"))) {
        const auto test = data::load_dataset(c.path("test.csv"));
        std::vector<geometry::DesignVector> designs;
        for (const auto& r : test.records) designs.push_back(r.design);
        const auto pred = surrogate::predict_labels(t.set, designs);
        std::array<double, hydro::kLabelDims> m{};
        for (std::size_t k = 0; k < hydro::kLabelDims; ++k) {
            std::vector<double> tv, pv;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                tv.push_back(hydro::to_array(test.records[i].labels)[k]);
                pv.push_back(hydro::to_array(pred[i])[k]);
            }
            m[k] = surrogate::mre(tv, pv);
        }
        test_mre = labels_or_null(m);
    }
    summary({{"command", "train-surrogates"},
             {"records", train.size()},
             {"final_loss", final_loss},
             {"test_mre", test_mre},
             {"dir", c.dir.string()}});
}

void cmd_train_cfm(const Context& c) {
    const auto train = data::load_dataset(c.path("train.csv"));
    const auto& cfg = c.profile.cfm;
    c.progress("training cfm on " + std::to_string(train.size()) + " records");
    const auto t = cfm::train_cfm(train, cfg, c.profile.seed, std::nullopt, epoch_logger(c, "cfm", cfg.schedule.epochs));
    cfm::save_cfm(t.model, c.path("cfm.json"));
    summary({{"command", "train-cfm"},
             {"records", train.size()},
             {"epochs", t.loss_history.size()},
             {"final_loss", t.loss_history.empty() ? 0.0 : t.loss_history.back()},
             {"path", c.path("cfm.json").string()}});
}

void cmd_generate(const Context& c, const cfm::TargetSpec& spec, std::size_t count, std::size_t steps,
                  std::optional<std::uint64_t> seed, std::optional<double> tol, const std::string& out_name) {
    const auto model = cfm::load_cfm(c.path("cfm.json"));
    spec.validate();
    if (count == 0) throw DomainError("--count must be positive");
    const std::size_t st = steps > 0 ? steps : c.profile.integration_steps;
    const std::uint64_t s = seed.value_or(c.profile.seed);
    const auto report = cfm::sample_designs(model, spec, count, st, s);
    for (const auto& w : report.warnings) c.progress("warning: " + w);
    const auto out = c.path(out_name);
    std::string table = cfm::to_csv(report);
    nlohmann::json j{{"command", "generate"}, {"count", report.designs.size()}, {"steps", st}, {"seed", s},
                     {"path", out.string()}, {"warnings", report.warnings}};
    if (fs::exists(surrogate::checkpoint_path(c.dir, 0))) {
        const auto sur = surrogate::load_surrogates(c.dir);
        const double t = tol.value_or(c.profile.validity_tolerance);
        const auto predicted = surrogate::predict_labels(sur, report.designs);
        const auto valid = surrogate::validate_predictions(predicted, spec, t);
        // Append predictions and the validity flag to every row.
        std::string extended;
        std::size_t row = 0, start = 0;
        for (std::size_t end = table.find('\n'); end != std::string::npos; end = table.find('\n', start)) {
            extended.append(table, start, end - start);
            if (row == 0) {
                extended += ",pred_eta_star,pred_j_star,pred_kt_star,surrogate_valid";
            } else {
                const auto& p = predicted[row - 1];
                for (double v : {p.eta_star, p.j_star, p.kt_star}) extended += "," + csv::format_number(v);
                extended += valid[row - 1] ? ",1" : ",0";
            }
            extended += '\n';
            start = end + 1;
            ++row;
        }
        table = std::move(extended);
        j["surrogate_valid"] = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
        j["tolerance"] = t;
    }
    data::write_text_file(out, table);
    summary(j);
}

void cmd_simulate(const Context& c, const std::string& design_file) {
    const auto design = read_design_file(design_file);
    const auto result = hydro::simulate(design);
    auto j = hydro::to_json(result);
    j["design"] = geometry::to_json(design);
    data::write_text_file(c.path("simulation.json"), j.dump(2));
    data::write_text_file(c.path("open_water.csv"), hydro::curve_to_csv(result.curve));

    plot::Panel panel{"open-water diagram", "J", "kT, 10kQ, eta", {}, false, std::nullopt, false};
    plot::Series kt{"kT", result.curve.grid.advance_ratios, result.curve.kt, "#1f77b4", true, false};
    plot::Series kq{"10kQ", result.curve.grid.advance_ratios, {}, "#d62728", true, false};
    plot::Series eta{"eta", {}, {}, "#2ca02c", true, false};
    for (std::size_t i = 0; i < result.curve.kq.size(); ++i) {
        kq.y.push_back(10.0 * result.curve.kq[i]);
        if (result.curve.kq[i] > 0.0 && result.curve.kt[i] > 0.0) {
            eta.x.push_back(result.curve.grid.advance_ratios[i]);
            eta.y.push_back(hydro::efficiency(result.curve.grid.advance_ratios[i], result.curve.kt[i], result.curve.kq[i]));
        }
    }
    panel.series = {kt, kq, eta};
    if (result.labels) panel.highlight = std::make_pair(result.labels->j_star, result.labels->eta_star);
    data::write_text_file(c.path("open_water.svg"), plot::render(panel));

    summary({{"command", "simulate"},
             {"design", geometry::to_json(design)},
             {"labels", j["labels"]},
             {"path", c.path("simulation.json").string()}});
}

void cmd_export_geometry(const Context& c, const std::string& design_file) {
    const auto design = read_design_file(design_file);
    const auto table = geometry::export_sections(geometry::build_blade(design));
    const auto out = c.path("sections.csv");
    data::write_text_file(out, geometry::to_csv(table));
    data::write_text_file(c.path("sections.json"),
                          nlohmann::json{{"design", geometry::to_json(design)}, {"rows", geometry::to_json(table)}}.dump(2));
    summary({{"command", "export-geometry"}, {"rows", table.rows.size()}, {"path", out.string()}});
}

void write_report(const Context& c, const eval::StudyReport& r) {
    data::write_text_file(c.path("study_" + r.study + ".json"), eval::to_json(r).dump(2));
    data::write_text_file(c.path("study_" + r.study + "_parity.svg"), eval::parity_svg(r));
    data::write_text_file(c.path("study_" + r.study + "_designs.svg"),
                          eval::histograms_svg(r.design_histograms, r.study + ": design parameters"));
    data::write_text_file(c.path("study_" + r.study + "_labels.svg"),
                          eval::histograms_svg(r.label_histograms, r.study + ": achieved labels"));
}

void cmd_study(const Context& c, const std::string& kind, const cfm::TargetSpec& spec, std::size_t count,
               std::size_t steps) {
    const std::size_t st = steps > 0 ? steps : c.profile.integration_steps;
    if (kind == "accuracy") {
        const auto model = cfm::load_cfm(c.path("cfm.json"));
        const auto test = data::load_dataset(c.path("test.csv"));
        c.progress("accuracy study on " + std::to_string(test.size()) + " targets");
        const auto r = eval::run_accuracy_study(model, test, st, c.profile.seed);
        write_report(c, r);
        // Same architecture and seed, no training: the reference every MRE should beat.
        c.progress("untrained baseline");
        const auto train = data::load_dataset(c.path("train.csv"));
        const auto b = eval::run_accuracy_study(cfm::untrained_cfm(train, c.profile.cfm, c.profile.seed), test, st,
                                                c.profile.seed);
        summary({{"command", "study"}, {"study", "accuracy"}, {"requested", r.requested}, {"valid", r.valid},
                 {"mre", labels_or_null(r.mre)},
                 {"untrained_baseline", {{"valid", b.valid}, {"mre", labels_or_null(b.mre)}}}});
    } else if (kind == "diversity") {
        const auto model = cfm::load_cfm(c.path("cfm.json"));
        cfm::TargetSpec target = spec;
        if (!target.eta_star && !target.j_star && !target.kt_star) target = cfm::TargetSpec::full(c.profile.diversity_target);
        const std::size_t n = count > 0 ? count : c.profile.diversity_count;
        c.progress("diversity study with " + std::to_string(n) + " designs");
        const auto r = eval::run_diversity_study(model, target, n, st, c.profile.seed);
        write_report(c, r);
        std::set<int> blades;
        for (const auto& d : r.designs) blades.insert(d.n_blades);
        summary({{"command", "study"}, {"study", "diversity"}, {"requested", r.requested}, {"valid", r.valid},
                 {"within_tolerance", labels_or_null(r.within_tolerance)}, {"distinct_n_blades", blades.size()},
                 {"mre", labels_or_null(r.mre)}});
    } else if (kind == "augmentation") {
        const auto train = data::load_dataset(c.path("train.csv"));
        const auto test = data::load_dataset(c.path("test.csv"));
        nlohmann::json runs = nlohmann::json::array();
        std::size_t kt_better = 0, j_not_better = 0;
        for (std::size_t i = 0; i < c.profile.augmentation_seeds; ++i) {
            eval::AugmentationConfig cfg{c.profile.augmentation_d_list, c.profile.augmentation_sizes, c.profile.surrogate,
                                         c.profile.cfm, st, c.profile.seed + i};
            const auto table = eval::run_augmentation_study(train, test, cfg, [&](const std::string& m) {
                c.progress("seed " + std::to_string(cfg.seed) + " " + m);
            });
            const std::string stem = "augmentation_seed" + std::to_string(cfg.seed);
            data::write_text_file(c.path(stem + ".csv"), eval::to_csv(table));
            data::write_text_file(c.path(stem + ".json"), eval::to_json(table).dump(2));
            data::write_text_file(c.path(stem + ".svg"), eval::mre_vs_d_svg(table));
            const auto& imp = table.improvement.front().front();
            if (imp[2] < 0.0) ++kt_better;
            if (imp[1] >= 0.0) ++j_not_better;
            runs.push_back(eval::to_json(table));
        }
        summary({{"command", "study"}, {"study", "augmentation"}, {"seeds", c.profile.augmentation_seeds},
                 {"smallest_d", c.profile.augmentation_d_list.front()},
                 {"kt_star_reduced_runs", kt_better}, {"j_star_not_improved_runs", j_not_better}});
    } else {
        throw DomainError("unknown study '" + kind + "' (expected accuracy, diversity or augmentation)");
    }
}

service::Server* g_server = nullptr;

void cmd_serve(const Context& c, const std::string& host, int port) {
    const auto svc = service::DesignService::from_directory(c.dir, {c.profile.integration_steps, c.profile.seed});
    if (!svc.ready()) c.progress("warning: checkpoints missing under " + c.dir.string() + "; /api/generate answers 503");
    service::Server server(svc);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    const bool ok = server.listen(host, port, [&](int bound) {
        summary({{"command", "serve"}, {"host", host}, {"port", bound}, {"ready", svc.ready()}});
    });
    g_server = nullptr;
    if (!ok) throw DomainError("cannot bind " + host + ":" + std::to_string(port));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"propforge: inverse design of ship propellers with conditional flow matching"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--profile", g.profile, "hyperparameter profile")->check(CLI::IsMember({"desk", "full"}));
    app.add_option("--config", g.config, "key = value overrides applied on top of the profile")->check(CLI::ExistingFile);
    app.add_option("--data-dir", g.data_dir, "artifact directory (default $PROPFORGE_DATA_DIR or ./propforge-data)");
    app.add_option("--seed", g.seed, "override the profile seed");
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::size_t n = 0;
    std::optional<std::uint64_t> data_seed;
    auto* gen_data = app.add_subcommand("gen-data", "simulate an LHS dataset into dataset.csv");
    gen_data->add_option("--n", n, "number of valid records (default: profile dataset size)");
    gen_data->add_option("--seed", data_seed, "sampling seed (default: profile seed)");

    std::size_t n_train = 0;
    auto* split = app.add_subcommand("split", "split dataset.csv into train.csv and test.csv");
    split->add_option("--n-train", n_train, "training records (default: profile train size)");

    auto* train_sur = app.add_subcommand("train-surrogates", "train the three forward surrogates on train.csv");
    auto* train_cfm = app.add_subcommand("train-cfm", "train the conditional flow model on train.csv");

    std::optional<double> eta, j, kt, tol;
    std::size_t count = 0, steps = 0;
    std::optional<std::uint64_t> gen_seed;
    std::string out_name = "generated.csv";
    auto* generate = app.add_subcommand("generate", "sample designs for target labels into generated.csv");
    generate->add_option("--eta", eta, "target eta_star");
    generate->add_option("--j", j, "target j_star");
    generate->add_option("--kt", kt, "target kt_star");
    generate->add_option("--count", count, "number of designs")->required();
    generate->add_option("--steps", steps, "RK4 steps (default: profile)");
    generate->add_option("--seed", gen_seed, "sampling seed (default: profile seed)");
    generate->add_option("--tolerance", tol, "relative tolerance for surrogate validity");
    generate->add_option("--out", out_name, "output file name inside the data dir");

    std::string design_file;
    auto* simulate = app.add_subcommand("simulate", "open-water simulation of one design (JSON file)");
    simulate->add_option("--design-file", design_file, "design JSON")->required()->check(CLI::ExistingFile);

    std::string geometry_file;
    auto* export_geo = app.add_subcommand("export-geometry", "write the section table of one design");
    export_geo->add_option("--design-file", geometry_file, "design JSON")->required()->check(CLI::ExistingFile);

    std::string study_kind;
    std::optional<double> s_eta, s_j, s_kt;
    std::size_t s_count = 0, s_steps = 0;
    auto* study = app.add_subcommand("study", "run an evaluation study");
    study->add_option("kind", study_kind, "accuracy, diversity or augmentation")
        ->required()
        ->check(CLI::IsMember({"accuracy", "diversity", "augmentation"}));
    study->add_option("--eta", s_eta, "diversity target eta_star");
    study->add_option("--j", s_j, "diversity target j_star");
    study->add_option("--kt", s_kt, "diversity target kt_star");
    study->add_option("--count", s_count, "diversity sample count (default: profile)");
    study->add_option("--steps", s_steps, "RK4 steps (default: profile)");

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "serve the JSON API");
    serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "bind address");

    auto* show = app.add_subcommand("show-profile", "print the effective profile as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const Context c = make_context(g);
        if (*gen_data) cmd_gen_data(c, n, data_seed);
        else if (*split) cmd_split(c, n_train);
        else if (*train_sur) cmd_train_surrogates(c);
        else if (*train_cfm) cmd_train_cfm(c);
        else if (*generate) cmd_generate(c, {eta, j, kt}, count, steps, gen_seed, tol, out_name);
        else if (*simulate) cmd_simulate(c, design_file);
        else if (*export_geo) cmd_export_geometry(c, geometry_file);
        else if (*study) cmd_study(c, study_kind, {s_eta, s_j, s_kt}, s_count, s_steps);
        else if (*serve) cmd_serve(c, host, port);
        else if (*show) summary(to_json(c.profile));
        return 0;
    } catch (const MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 2;
    }
}

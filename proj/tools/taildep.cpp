// taildep: command line front end.

#include "taildep/baselines.hpp"
#include "taildep/format.hpp"
#include "taildep/model_io.hpp"
#include "taildep/pipeline.hpp"
#include "taildep/rng.hpp"
#include "taildep/tail_metrics.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace {

using namespace taildep;

struct SharedFlags {
    PipelineConfig config;
    std::string mode = "returns";
    std::map<std::string, CLI::Option*> options;
};

void add_shared(CLI::App& cmd, SharedFlags& f) {
    auto& c = f.config;
    f.options["input"] = cmd.add_option("--input", c.input, "Input CSV (or model file for simulate)");
    f.options["mode"] = cmd.add_option("--mode", f.mode, "Input values are prices or returns")
                            ->check(CLI::IsMember({"prices", "returns"}));
    f.options["model"] = cmd.add_option("--model", c.model, "Dependence model")
                             ->check(CLI::IsMember({"triangular", "onefactor", "mvnormal", "mvt", "clayton",
                                                    "gumbel", "of-gaussian", "of-t"}));
    f.options["reduced"] = cmd.add_flag("--reduced", c.reduced, "Reduced triangular model");
    f.options["tau"] = cmd.add_option("--tau", c.tau, "Joint tail probability for the backtest");
    f.options["grid"] = cmd.add_option("--grid", c.grid, "Quantile grid, 99 or 21 levels")->check(CLI::IsMember({99, 21}));
    f.options["samples"] = cmd.add_option("--samples", c.samples, "Model sample size");
    f.options["seed"] = cmd.add_option("--seed", c.seed, "Random seed");
    f.options["split"] = cmd.add_option("--split", c.split, "Training fraction");
    f.options["out"] = cmd.add_option("--out", c.out, "Output directory");
    f.options["A"] = cmd.add_option("--A", c.A, "HTQF constant A (at least 3)");
    f.options["latent_df"] = cmd.add_option("--latent-df", c.latent_df, "Student t latent df, 0 for normal");
}

PipelineConfig finish(SharedFlags& f) {
    f.config.mode = *parse_input_mode(f.mode);
    return f.config;
}

void require(const SharedFlags& f, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        if (f.options.at(n)->count() == 0) throw std::invalid_argument(std::string("missing --") + n);
    }
}

ReturnPanel load_panel(const PipelineConfig& c) {
    IngestOptions o;
    o.split = c.split;
    return ingest_csv_file(c.input, c.mode, o);
}

AnyModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open model file '" + path + "'");
    return read_model(in);
}

std::vector<TailCurve> both_sides(const Matrix& sample) {
    const auto taus = default_curve_taus(sample.rows());
    auto curves = tail_curves_from_sample(sample, taus, TailSide::Down);
    auto up = tail_curves_from_sample(sample, taus, TailSide::Up);
    curves.insert(curves.end(), up.begin(), up.end());
    return curves;
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& names) {
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
        out << '\n';
    }
}

std::vector<std::string> column_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < n; ++c) names.push_back("y" + std::to_string(c + 1));
    return names;
}

int cmd_fit(const PipelineConfig& c) {
    OutputSet out(c.out);
    const auto panel = load_panel(c);
    const auto fit = fit_model(panel.returns, c);
    out.write("model.csv", [&](std::ostream& o) { write_model(o, fit.model); });
    out.write("diagnostics.csv", [&](std::ostream& o) { write_diagnostics_csv(o, fit.stages); });
    out.write_manifest(manifest_entries("fit", c, &panel));
    out.commit();
    return 0;
}

int cmd_simulate(const PipelineConfig& c, bool curves_only) {
    const AnyModel model = load_model(c.input);
    OutputSet out(c.out);
    const Matrix sample = make_sampler(model)(c.samples, c.seed);
    if (!curves_only) {
        out.write("samples.csv", [&](std::ostream& o) { write_matrix_csv(o, sample, column_names(sample.cols())); });
    }
    out.write("tailcurves.csv", [&](std::ostream& o) { write_tail_curves_csv(o, both_sides(sample)); });
    auto entries = manifest_entries("simulate", c, nullptr);
    entries.emplace_back("model.kind", model_kind(model));
    out.write_manifest(entries);
    out.commit();
    return 0;
}

int cmd_taildep(const PipelineConfig& c) {
    OutputSet out(c.out);
    const auto panel = load_panel(c);
    const auto curves = both_sides(panel.returns);
    out.write("tailcurves.csv", [&](std::ostream& o) { write_tail_curves_csv(o, curves); });
    out.write_manifest(manifest_entries("taildep", c, &panel));
    out.commit();
    return 0;
}

int cmd_garch_filter(const PipelineConfig& c) {
    OutputSet out(c.out);
    const auto panel = load_panel(c);
    const auto filtered = filter_panel(panel);
    out.write("garch.csv", [&](std::ostream& o) { write_garch_csv(o, panel.names, filtered.fits); });
    out.write("residuals.csv", [&](std::ostream& o) {
        ReturnPanel r;
        r.names = panel.names;
        r.dates.assign(panel.dates.begin(), panel.dates.begin() + static_cast<std::ptrdiff_t>(panel.split_index));
        r.returns = filtered.residuals;
        write_panel_csv(o, r);
    });
    out.write_manifest(manifest_entries("garch-filter", c, &panel));
    out.commit();
    return 0;
}

int cmd_backtest(const PipelineConfig& c, const std::string& model_file) {
    const AnyModel model = load_model(model_file);
    OutputSet out(c.out);
    const auto panel = load_panel(c);
    const auto filtered = filter_panel(panel);
    const Matrix sample = make_sampler(model)(c.samples, derive_seed(c.seed, 1));
    const auto coverage = backtest_panel(panel, filtered.fits, sample, c.tau);
    out.write("coverage.csv", [&](std::ostream& o) { write_coverage_csv(o, coverage); });
    out.write("garch.csv", [&](std::ostream& o) { write_garch_csv(o, panel.names, filtered.fits); });
    auto entries = manifest_entries("backtest", c, &panel);
    entries.emplace_back("model.file", model_file);
    entries.emplace_back("model.fnv1a64", hex64(file_digest(model_file)));
    out.write_manifest(entries);
    out.commit();
    return 0;
}

TriangularModel default_generator() {
    auto m = TriangularModel::independent(3);
    for (std::size_t i = 0; i < 3; ++i) {
        m.v(i, i) = 1.5;
        for (std::size_t j = 0; j < i; ++j) m.sigma(i, j) = 0.5;
    }
    return m;
}

int cmd_synth(const PipelineConfig& c, const std::string& model_file, std::size_t rows) {
    const AnyModel model = model_file.empty() ? AnyModel(default_generator()) : load_model(model_file);
    OutputSet out(c.out);
    const std::vector<GarchParams> garch(model_dim(model), GarchParams{0.05, 0.10, 0.05, 0.10, 0.85, 6.0});
    const auto panel = synthesize_panel(make_sampler(model), garch, rows, c.seed, c.split);
    out.write("panel.csv", [&](std::ostream& o) { write_panel_csv(o, panel); });
    auto entries = manifest_entries("synth", c, &panel);
    entries.emplace_back("model.kind", model_kind(model));
    out.write_manifest(entries);
    out.commit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate tail dependence: fitting, simulation and coverage backtests"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (results do not depend on it)");

    SharedFlags fit_f, sim_f, td_f, gf_f, bt_f, pl_f, sy_f;
    auto* fit = app.add_subcommand("fit", "Fit a dependence model to the rows of a panel");
    add_shared(*fit, fit_f);
    auto* sim = app.add_subcommand("simulate", "Sample a saved model and write tail curves");
    add_shared(*sim, sim_f);
    bool curves_only = false;
    sim->add_flag("--curves-only", curves_only, "Skip samples.csv");
    auto* td = app.add_subcommand("taildep", "Empirical tail dependence curves of a panel");
    add_shared(*td, td_f);
    auto* gf = app.add_subcommand("garch-filter", "AR(1)-GARCH(1,1)-t fits and training residuals");
    add_shared(*gf, gf_f);
    auto* bt = app.add_subcommand("backtest", "Coverage backtest of a saved model on the test split");
    add_shared(*bt, bt_f);
    std::string bt_model;
    bt->add_option("--model-file", bt_model, "Model file written by fit")->required();
    auto* pl = app.add_subcommand("pipeline", "GARCH filter, fit and backtest in one run");
    add_shared(*pl, pl_f);
    std::string config_path;
    pl->add_option("--config", config_path, "key = value file; explicit flags override it");
    auto* sy = app.add_subcommand("synth", "Synthetic GARCH panel driven by a joint innovation model");
    add_shared(*sy, sy_f);
    std::string sy_model;
    std::size_t sy_rows = 8000;
    sy->add_option("--model-file", sy_model, "Innovation model (default: 3-dim triangular example)");
    sy->add_option("--rows", sy_rows, "Number of returns");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) set_worker_count(threads);

    try {
        if (*fit) {
            require(fit_f, {"input", "out"});
            return cmd_fit(finish(fit_f));
        }
        if (*sim) {
            require(sim_f, {"input", "out"});
            return cmd_simulate(finish(sim_f), curves_only);
        }
        if (*td) {
            require(td_f, {"input", "out"});
            return cmd_taildep(finish(td_f));
        }
        if (*gf) {
            require(gf_f, {"input", "out"});
            return cmd_garch_filter(finish(gf_f));
        }
        if (*bt) {
            require(bt_f, {"input", "out"});
            return cmd_backtest(finish(bt_f), bt_model);
        }
        if (*pl) {
            PipelineConfig c = finish(pl_f);
            if (!config_path.empty()) {
                PipelineConfig base = read_config_file(config_path);
                const auto& o = pl_f.options;
                if (o.at("input")->count()) base.input = c.input;
                if (o.at("mode")->count()) base.mode = c.mode;
                if (o.at("model")->count()) base.model = c.model;
                if (o.at("reduced")->count()) base.reduced = c.reduced;
                if (o.at("tau")->count()) base.tau = c.tau;
                if (o.at("grid")->count()) base.grid = c.grid;
                if (o.at("samples")->count()) base.samples = c.samples;
                if (o.at("seed")->count()) base.seed = c.seed;
                if (o.at("split")->count()) base.split = c.split;
                if (o.at("out")->count()) base.out = c.out;
                if (o.at("A")->count()) base.A = c.A;
                if (o.at("latent_df")->count()) base.latent_df = c.latent_df;
                c = base;
            } else {
                require(pl_f, {"input", "out"});
            }
            const auto result = run_pipeline_command(c);
            std::cout << "pairs " << result.coverage.size() << ", rejections at 95%: " << result.rejections() << '\n';
            return 0;
        }
        if (*sy) {
            require(sy_f, {"out"});
            return cmd_synth(finish(sy_f), sy_model, sy_rows);
        }
    } catch (const std::exception& e) {
        std::cerr << "taildep: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

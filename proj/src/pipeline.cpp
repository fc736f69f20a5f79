#include "taildep/pipeline.hpp"

#include "taildep/baselines.hpp"
#include "taildep/format.hpp"
#include "taildep/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace taildep {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 12> kConfigKeys = {
    "input", "mode", "model", "reduced", "tau", "grid", "samples", "seed", "split", "out", "A", "latent_df"};
constexpr std::array<std::string_view, 4> kRequiredKeys = {"input", "mode", "model", "out"};

// Stream tags for seeds derived from the run seed.
constexpr std::uint64_t kModelSampleStream = 1;

bool parse_bool(std::string_view v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("expected a boolean, got '" + std::string(v) + "'");
}

std::size_t parse_count(std::string_view v) {
    const long long x = parse_int(v);
    if (x < 0) throw std::invalid_argument("expected a non-negative integer");
    return static_cast<std::size_t>(x);
}

template <class Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (!is_model_name(model)) throw std::invalid_argument("config field 'model': unknown model '" + model + "'");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("config field 'tau': must lie in (0, 1)");
    if (grid != 99 && grid != 21) throw std::invalid_argument("config field 'grid': must be 99 or 21");
    if (samples < 1000) throw std::invalid_argument("config field 'samples': need at least 1000");
    if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("config field 'split': must lie in (0, 1)");
    if (!(A >= kMinA)) throw std::invalid_argument("config field 'A': must be at least 3");
    if (latent_df != 0.0 && !(latent_df > 2.0)) {
        throw std::invalid_argument("config field 'latent_df': must be 0 (normal) or exceed 2");
    }
}

bool is_model_name(std::string_view name) noexcept {
    return name == "triangular" || name == "onefactor" || parse_baseline_kind(name).has_value();
}

PipelineConfig read_config(std::istream& in) {
    std::map<std::string, std::string, std::less<>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string_view body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(body.substr(0, eq)));
        if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown field '" + key + "'");
        }
        if (!kv.emplace(key, std::string(trim(body.substr(eq + 1)))).second) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate field '" + key + "'");
        }
    }
    for (auto key : kRequiredKeys) {
        if (kv.find(key) == kv.end()) throw std::invalid_argument("config: missing field '" + std::string(key) + "'");
    }

    PipelineConfig c;
    for (const auto& [key, value] : kv) {
        try {
            if (key == "input") {
                c.input = value;
            } else if (key == "mode") {
                const auto m = parse_input_mode(value);
                if (!m) throw std::invalid_argument("expected prices or returns");
                c.mode = *m;
            } else if (key == "model") {
                c.model = value;
            } else if (key == "reduced") {
                c.reduced = parse_bool(value);
            } else if (key == "tau") {
                c.tau = parse_double(value);
            } else if (key == "grid") {
                c.grid = parse_count(value);
            } else if (key == "samples") {
                c.samples = parse_count(value);
            } else if (key == "seed") {
                c.seed = static_cast<std::uint64_t>(parse_count(value));
            } else if (key == "split") {
                c.split = parse_double(value);
            } else if (key == "out") {
                c.out = value;
            } else if (key == "A") {
                c.A = parse_double(value);
            } else if (key == "latent_df") {
                c.latent_df = parse_double(value);
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config field '" + key + "': " + e.what());
        }
    }
    if (c.input.empty()) throw std::invalid_argument("config: missing field 'input'");
    if (c.out.empty()) throw std::invalid_argument("config: missing field 'out'");
    c.validate();
    return c;
}

PipelineConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    return read_config(in);
}

std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& c) {
    return {{"input", c.input},
            {"mode", std::string(to_string(c.mode))},
            {"model", c.model},
            {"reduced", c.reduced ? "1" : "0"},
            {"tau", format_double(c.tau)},
            {"grid", std::to_string(c.grid)},
            {"samples", std::to_string(c.samples)},
            {"seed", std::to_string(c.seed)},
            {"split", format_double(c.split)},
            {"out", c.out},
            {"A", format_double(c.A)},
            {"latent_df", format_double(c.latent_df)}};
}

ModelFit fit_model(const Matrix& data, const PipelineConfig& config) {
    config.validate();
    const QuantileGrid grid = config.grid == 21 ? QuantileGrid::levels21() : QuantileGrid::levels99();
    const LatentLaw law = config.latent_df == 0.0 ? LatentLaw::standard_normal() : LatentLaw::student_t(config.latent_df);
    if (config.model == "triangular") {
        auto report = fit_triangular(data, grid, law, config.reduced, config.A);
        return {std::move(report.model), std::move(report.stages)};
    }
    if (config.model == "onefactor") {
        if (data.cols() < 2) throw std::invalid_argument("onefactor: need a market column and at least one asset");
        std::vector<std::size_t> assets(data.cols() - 1);
        for (std::size_t i = 0; i < assets.size(); ++i) assets[i] = i + 1;
        auto report = fit_onefactor(data.col(0), data.select_cols(assets), grid, law, config.A);
        return {std::move(report.model), std::move(report.stages)};
    }
    return {fit_baseline(*parse_baseline_kind(config.model), data), {}};
}

std::size_t PipelineResult::rejections() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(coverage.begin(), coverage.end(), [](const CoverageResult& r) { return r.reject_95; }));
}

std::vector<double> default_curve_taus(std::size_t n_samples) {
    // The proxy needs n tau >= 100 at the smallest level.
    const double lo = std::max(1e-3, 100.0 / static_cast<double>(n_samples));
    return log_spaced(lo, 0.1, 21);
}

FilterResult filter_panel(const ReturnPanel& panel) {
    const Matrix train = panel.train();
    FilterResult out;
    out.residuals = Matrix(train.rows(), train.cols());
    for (std::size_t c = 0; c < train.cols(); ++c) {
        in_stage("garch " + panel.names[c], [&] {
            out.fits.push_back(garch_fit(train.col(c)));
            const auto eps = garch_filter(train.col(c), out.fits.back().params);
            std::copy(eps.begin(), eps.end(), out.residuals.col(c).begin());
            return 0;
        });
    }
    return out;
}

std::vector<CoverageResult> backtest_panel(const ReturnPanel& panel, std::span<const GarchFit> fits,
                                           const Matrix& model_sample, double tau) {
    if (model_sample.cols() != panel.cols()) {
        throw std::invalid_argument("backtest: model has " + std::to_string(model_sample.cols()) +
                                    " dimensions, panel has " + std::to_string(panel.cols()) + " series");
    }
    const auto sampler = [&](std::size_t i, std::size_t j, std::size_t, std::uint64_t) {
        const std::array<std::size_t, 2> cols{i, j};
        return model_sample.select_cols(cols);
    };
    CoverageOptions options;
    options.tau = tau;
    options.n_samples = model_sample.rows();
    return pairwise_coverage_matrix(panel.test(), fits, sampler, options);
}

PipelineResult run_pipeline(const ReturnPanel& panel, const PipelineConfig& config) {
    in_stage("config", [&] {
        config.validate();
        panel.validate();
        return 0;
    });
    if (panel.cols() < 2) throw PipelineError("config", "need at least two series");
    PipelineResult result;
    auto filtered = filter_panel(panel);
    result.garch = std::move(filtered.fits);
    result.residuals = std::move(filtered.residuals);
    result.fit = in_stage("fit", [&] { return fit_model(result.residuals, config); });
    const Matrix sample = in_stage("sample", [&] {
        return make_sampler(result.fit.model)(config.samples, derive_seed(config.seed, kModelSampleStream));
    });
    result.coverage = in_stage("coverage", [&] { return backtest_panel(panel, result.garch, sample, config.tau); });
    result.curves = in_stage("tailcurves", [&] {
        const auto taus = default_curve_taus(sample.rows());
        auto curves = tail_curves_from_sample(sample, taus, TailSide::Down);
        auto up = tail_curves_from_sample(sample, taus, TailSide::Up);
        curves.insert(curves.end(), up.begin(), up.end());
        return curves;
    });
    return result;
}

void write_garch_csv(std::ostream& out, std::span<const std::string> names, std::span<const GarchFit> fits) {
    out << "series,gamma0,gamma1,beta0,beta1,beta2,nu,loglik,iterations,near_integrated\n";
    for (std::size_t c = 0; c < fits.size(); ++c) {
        const auto& p = fits[c].params;
        out << names[c] << ',' << format_double(p.gamma0) << ',' << format_double(p.gamma1) << ','
            << format_double(p.beta0) << ',' << format_double(p.beta1) << ',' << format_double(p.beta2) << ','
            << format_double(p.nu) << ',' << format_double(fits[c].loglik) << ',' << fits[c].iterations << ','
            << (fits[c].near_integrated ? 1 : 0) << '\n';
    }
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    for (int k = 15; k >= 0; --k) {
        buf[k] = "0123456789abcdef"[x & 0xF];
        x >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

std::uint64_t file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a64(ss.str());
}

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw std::invalid_argument("output directory not set");
    if (!fs::exists(dir_)) {
        fs::create_directories(dir_);
        created_dir_ = true;
    } else if (!fs::is_directory(dir_)) {
        throw std::invalid_argument("output path '" + dir_.string() + "' is not a directory");
    }
}

OutputSet::~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& name : written_) fs::remove(dir_ / name, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

void OutputSet::write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = dir_ / name;
    written_.push_back(name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void OutputSet::write_manifest(const std::vector<std::pair<std::string, std::string>>& entries) {
    std::vector<std::pair<std::string, std::string>> digests;
    for (const auto& name : written_) digests.emplace_back("output." + name + ".fnv1a64", hex64(file_digest(dir_ / name)));
    write("manifest.txt", [&](std::ostream& out) {
        out << "taildep-manifest,1\n";
        for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
        for (const auto& [k, v] : digests) out << k << '=' << v << '\n';
    });
}

std::vector<std::pair<std::string, std::string>> manifest_entries(std::string_view command,
                                                                  const PipelineConfig& config,
                                                                  const ReturnPanel* panel) {
    std::vector<std::pair<std::string, std::string>> e;
    e.emplace_back("command", std::string(command));
    e.emplace_back("version", std::string(kVersion));
    for (const auto& [k, v] : config_entries(config)) e.emplace_back("config." + k, v);
    e.emplace_back("seed.model_sample", std::to_string(derive_seed(config.seed, kModelSampleStream)));
    if (!config.input.empty() && fs::is_regular_file(config.input)) {
        e.emplace_back("input.fnv1a64", hex64(file_digest(config.input)));
    }
    if (panel != nullptr) {
        e.emplace_back("input.rows", std::to_string(panel->rows()));
        e.emplace_back("input.split_index", std::to_string(panel->split_index));
        e.emplace_back("input.first_date", panel->dates.front());
        e.emplace_back("input.last_date", panel->dates.back());
        std::string cols;
        for (std::size_t c = 0; c < panel->names.size(); ++c) cols += (c ? ";" : "") + panel->names[c];
        e.emplace_back("columns", cols);
    }
    return e;
}

PipelineResult run_pipeline_command(const PipelineConfig& config) {
    in_stage("config", [&] {
        config.validate();
        return 0;
    });
    OutputSet outputs(config.out);
    IngestOptions ingest;
    ingest.split = config.split;
    const ReturnPanel panel = in_stage("ingest", [&] { return ingest_csv_file(config.input, config.mode, ingest); });
    PipelineResult result = run_pipeline(panel, config);
    in_stage("write", [&] {
        outputs.write("model.csv", [&](std::ostream& o) { write_model(o, result.fit.model); });
        outputs.write("coverage.csv", [&](std::ostream& o) { write_coverage_csv(o, result.coverage); });
        outputs.write("tailcurves.csv", [&](std::ostream& o) { write_tail_curves_csv(o, result.curves); });
        outputs.write("diagnostics.csv", [&](std::ostream& o) {
            std::vector<StageDiagnostics> rows;
            for (std::size_t c = 0; c < result.garch.size(); ++c) {
                rows.push_back({c, -1, "garch", result.garch[c].loglik, result.garch[c].iterations, true});
            }
            rows.insert(rows.end(), result.fit.stages.begin(), result.fit.stages.end());
            write_diagnostics_csv(o, rows);
        });
        outputs.write("garch.csv", [&](std::ostream& o) { write_garch_csv(o, panel.names, result.garch); });
        outputs.write_manifest(manifest_entries("pipeline", config, &panel));
        return 0;
    });
    outputs.commit();
    return result;
}

}  // namespace taildep

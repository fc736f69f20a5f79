#pragma once

// End-to-end runs: GARCH filtering per series on the training split, a
// dependence model on the residuals, and the pairwise coverage backtest on
// the test split. Also the small pieces the command line tool shares.

#include "taildep/coverage.hpp"
#include "taildep/garch.hpp"
#include "taildep/learning.hpp"
#include "taildep/model_io.hpp"
#include "taildep/panel.hpp"
#include "taildep/tail_metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace taildep {

inline constexpr std::string_view kVersion = "0.1.0";

struct PipelineConfig {
    std::string input;
    InputMode mode = InputMode::Returns;
    std::string model = "triangular";
    bool reduced = false;
    double tau = 0.01;
    std::size_t grid = 99;
    std::size_t samples = 1000000;
    std::uint64_t seed = 0;
    double split = 0.75;
    std::string out;
    double A = kDefaultA;
    double latent_df = 0.0;  // 0 selects standard normal latents

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// key = value lines; '#' starts a comment. input, mode, model and out are
/// required, everything else falls back to its default.
[[nodiscard]] PipelineConfig read_config(std::istream& in);
[[nodiscard]] PipelineConfig read_config_file(const std::string& path);
/// Fields in a fixed order, formatted as read_config expects them.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& config);

[[nodiscard]] bool is_model_name(std::string_view name) noexcept;

/// Error tagged with the pipeline stage that raised it.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what)
        : std::runtime_error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct ModelFit {
    AnyModel model;
    std::vector<StageDiagnostics> stages;
};

/// Fits config.model to the rows of `data`. The one-factor kinds take
/// column 0 as the market.
[[nodiscard]] ModelFit fit_model(const Matrix& data, const PipelineConfig& config);

struct PipelineResult {
    std::vector<GarchFit> garch;
    Matrix residuals;  // training rows
    ModelFit fit;
    std::vector<CoverageResult> coverage;
    std::vector<TailCurve> curves;

    [[nodiscard]] std::size_t rejections() const noexcept;
};

/// 21 log-spaced levels on [max(1e-3, 100 / n), 0.1].
[[nodiscard]] std::vector<double> default_curve_taus(std::size_t n_samples);

/// Runs every stage in memory. Coverage and tail curves share one model
/// sample of config.samples rows.
[[nodiscard]] PipelineResult run_pipeline(const ReturnPanel& panel, const PipelineConfig& config);

/// GARCH fits on the training rows and the residual matrix.
struct FilterResult {
    std::vector<GarchFit> fits;
    Matrix residuals;
};
[[nodiscard]] FilterResult filter_panel(const ReturnPanel& panel);

/// Coverage of the test rows against a given joint innovation model.
[[nodiscard]] std::vector<CoverageResult> backtest_panel(const ReturnPanel& panel,
                                                         std::span<const GarchFit> fits,
                                                         const Matrix& model_sample, double tau);

void write_garch_csv(std::ostream& out, std::span<const std::string> names, std::span<const GarchFit> fits);

/// 64-bit FNV-1a.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t x);
[[nodiscard]] std::uint64_t file_digest(const std::filesystem::path& path);

/// Output files of one run. Files are registered as they are written; unless
/// commit() is called, the destructor removes them again (and the directory
/// if this object created it).
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    ~OutputSet();
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    void write(const std::string& name, const std::function<void(std::ostream&)>& body);
    /// Writes manifest.txt: the given entries, then a digest per output file.
    void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries);
    void commit() noexcept { committed_ = true; }
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    bool created_dir_ = false;
    bool committed_ = false;
    std::vector<std::string> written_;
};

/// Manifest entries shared by every command: version, config, input digest
/// and shape, column order.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> manifest_entries(
    std::string_view command, const PipelineConfig& config, const ReturnPanel* panel);

/// ingest, run_pipeline and write model.csv, coverage.csv, tailcurves.csv,
/// diagnostics.csv and manifest.txt into config.out.
PipelineResult run_pipeline_command(const PipelineConfig& config);

}  // namespace taildep

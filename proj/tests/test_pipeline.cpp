#include "doctest.h"

#include "taildep/pipeline.hpp"
#include "taildep/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace taildep;
namespace fs = std::filesystem;

namespace {

const GarchParams kGarch{0.05, 0.10, 0.05, 0.10, 0.85, 6.0};

TriangularModel baseline3() {
    auto m = TriangularModel::independent(3);
    for (std::size_t i = 0; i < 3; ++i) {
        m.v(i, i) = 1.5;
        for (std::size_t j = 0; j < i; ++j) m.sigma(i, j) = 0.5;
    }
    return m;
}

ReturnPanel small_panel(std::uint64_t seed, std::size_t T = 2400) {
    const std::vector<GarchParams> g(3, kGarch);
    return synthesize_panel(make_sampler(baseline3()), g, T, seed);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string prices_csv(std::size_t rows) {
    std::ostringstream s;
    s << "date,A,B\n";
    const auto dates = synthetic_dates(rows);
    for (std::size_t t = 0; t < rows; ++t) {
        s << dates[t] << ',' << 100.0 + static_cast<double>(t % 7) << ',' << 50.0 + static_cast<double>(t % 5) << '\n';
    }
    return s.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("taildep_test_" + name);
    fs::remove_all(p);
    return p;
}

struct QuietWarnings {
    std::vector<std::string> messages;
    QuietWarnings() {
        set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
    }
    ~QuietWarnings() { set_warning_sink(nullptr); }
};

}  // namespace

TEST_CASE("price to return conversion by hand") {
    std::istringstream in("date,X\n2020-01-01,100\n2020-01-02,101\n2020-01-03,101\n");
    const auto p = ingest_csv(in, InputMode::Prices, {1, 0.5});
    REQUIRE(p.rows() == 2);
    CHECK(p.returns(1, 0) == 0.0);
    CHECK(p.returns(0, 0) == doctest::Approx(0.99503).epsilon(1e-5));
    CHECK(p.returns(0, 0) == doctest::Approx(100.0 * std::log(1.01)).epsilon(1e-15));
    CHECK(p.dates[0] == "2020-01-02");
    CHECK(p.names == std::vector<std::string>{"X"});
}

TEST_CASE("ingest drops missing rows and reports the count") {
    QuietWarnings w;
    std::istringstream in(
        "date,A,B\n"
        "2020-01-01,100,10\n"
        "2020-01-02,NA,11\n"
        "2020-01-03,110,\n"
        "2020-01-06,121,12\n"
        "2020-01-07,110,12\n");
    const auto p = ingest_csv(in, InputMode::Prices, {2, 0.5});
    REQUIRE(p.rows() == 2);
    CHECK(p.returns(0, 0) == doctest::Approx(100.0 * std::log(1.21)));
    CHECK(p.returns(0, 1) == doctest::Approx(100.0 * std::log(1.2)));
    CHECK(p.dates == std::vector<std::string>{"2020-01-06", "2020-01-07"});
    REQUIRE(w.messages.size() == 1);
    CHECK(w.messages[0].find("dropped 2 rows") != std::string::npos);
}

TEST_CASE("ingest errors carry the line number") {
    const auto fails_with = [](const std::string& text, const std::string& needle, InputMode mode) {
        std::istringstream in(text);
        CHECK_THROWS_WITH_AS((void)ingest_csv(in, mode, {1, 0.5}), doctest::Contains(needle.c_str()),
                             std::invalid_argument);
    };
    fails_with("date,A\n2020-01-02,1\n2020-01-01,2\n2020-01-03,2\n", "line 3", InputMode::Returns);
    fails_with("date,A\n2020-01-02,1\n2020-01-02,2\n", "strictly increasing", InputMode::Returns);
    fails_with("date,A\n2020-01-01,1\n2020-01-02,x1\n", "line 3", InputMode::Returns);
    fails_with("date,A\n2020-01-01,1\n2020-02-30,1\n", "bad date", InputMode::Returns);
    fails_with("date,A,B\n2020-01-01,1\n", "expected 3 fields", InputMode::Returns);
    fails_with("date,A\n2020-01-01,1\n2020-01-02,-3\n", "positive", InputMode::Prices);
    fails_with("date,A,A\n", "duplicate", InputMode::Returns);

    std::istringstream short_panel(prices_csv(400));
    CHECK_THROWS_WITH_AS((void)ingest_csv(short_panel, InputMode::Prices), doctest::Contains("at least 500"),
                         std::invalid_argument);
}

TEST_CASE("constant prices give zero returns that GARCH rejects") {
    std::ostringstream s;
    s << "date,A\n";
    for (const auto& d : synthetic_dates(700)) s << d << ",42\n";
    std::istringstream in(s.str());
    const auto p = ingest_csv(in, InputMode::Prices);
    for (double r : p.returns.raw()) CHECK(r == 0.0);
    CHECK_THROWS_AS((void)garch_fit(p.returns.col(0)), std::invalid_argument);
}

TEST_CASE("split point") {
    CHECK(split_point(8, 0.75) == 6);
    CHECK(split_point(8302, 0.75) == 6227);
    CHECK(split_point(8000, 0.75) == 6000);
    CHECK_THROWS_AS((void)split_point(1, 0.75), std::invalid_argument);
    CHECK_THROWS_AS((void)split_point(100, 1.0), std::invalid_argument);
}

TEST_CASE("dates") {
    CHECK(is_iso_date("2024-02-29"));
    CHECK_FALSE(is_iso_date("2023-02-29"));
    CHECK_FALSE(is_iso_date("2023-1-01"));
    const auto d = synthetic_dates(400);
    CHECK(d.front() == "2000-01-01");
    CHECK(d[59] == "2000-02-29");
    for (std::size_t k = 1; k < d.size(); ++k) CHECK(d[k - 1] < d[k]);
}

TEST_CASE("config parsing") {
    std::istringstream good(
        "# run\n"
        "input = data.csv\n"
        "mode = prices\n"
        "model = mvt\n"
        "out = results  # trailing comment\n"
        "seed = 7\n"
        "grid = 21\n");
    const auto c = read_config(good);
    CHECK(c.input == "data.csv");
    CHECK(c.mode == InputMode::Prices);
    CHECK(c.model == "mvt");
    CHECK(c.out == "results");
    CHECK(c.seed == 7);
    CHECK(c.grid == 21);
    CHECK(c.tau == 0.01);
    CHECK(c.samples == 1000000);
    CHECK(c.split == 0.75);

    // Entries round trip through the parser.
    std::ostringstream text;
    for (const auto& [k, v] : config_entries(c)) text << k << " = " << v << '\n';
    std::istringstream again(text.str());
    CHECK(config_entries(read_config(again)) == config_entries(c));

    std::istringstream missing("input = a.csv\nmode = returns\nout = o\n");
    CHECK_THROWS_WITH_AS((void)read_config(missing), doctest::Contains("'model'"), std::invalid_argument);
    std::istringstream unknown("input = a.csv\nmode = returns\nmodel = mvt\nout = o\ncolour = red\n");
    CHECK_THROWS_WITH_AS((void)read_config(unknown), doctest::Contains("'colour'"), std::invalid_argument);
    std::istringstream bad_model("input = a.csv\nmode = returns\nmodel = vine\nout = o\n");
    CHECK_THROWS_WITH_AS((void)read_config(bad_model), doctest::Contains("'model'"), std::invalid_argument);
    std::istringstream bad_tau("input = a.csv\nmode = returns\nmodel = mvt\nout = o\ntau = abc\n");
    CHECK_THROWS_WITH_AS((void)read_config(bad_tau), doctest::Contains("'tau'"), std::invalid_argument);
}

TEST_CASE("FNV-1a reference values") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
    CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("synthetic panel shape and determinism") {
    const auto a = small_panel(3, 1000);
    CHECK(a.rows() == 1000);
    CHECK(a.cols() == 3);
    CHECK(a.split_index == 750);
    CHECK_NOTHROW(a.validate());
    CHECK(small_panel(3, 1000).returns.raw() == a.returns.raw());
    CHECK(small_panel(4, 1000).returns.raw() != a.returns.raw());

    // Written and re-read as returns, the panel is unchanged.
    std::stringstream s;
    write_panel_csv(s, a);
    const auto b = ingest_csv(s, InputMode::Returns);
    CHECK(b.returns.raw() == a.returns.raw());
    CHECK(b.names == a.names);
    CHECK(b.dates == a.dates);
}

TEST_CASE("test rows never influence fitted parameters") {
    QuietWarnings w;
    const auto panel = small_panel(5);
    PipelineConfig c;
    c.samples = 20000;
    const auto base = run_pipeline(panel, c);

    auto altered = panel;
    for (std::size_t t = panel.split_index; t < panel.rows(); ++t)
        for (std::size_t k = 0; k < panel.cols(); ++k) altered.returns(t, k) *= -3.0;
    const auto other = run_pipeline(altered, c);

    std::ostringstream m1, m2;
    write_model(m1, base.fit.model);
    write_model(m2, other.fit.model);
    CHECK(m1.str() == m2.str());
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(base.garch[k].loglik == other.garch[k].loglik);
        CHECK(base.garch[k].last_state.sigma2 == other.garch[k].last_state.sigma2);
    }
    // A panel cut 10 rows after the split point gives the same model.
    ReturnPanel cut = panel;
    cut.returns = panel.returns.row_slice(0, panel.split_index + 10);
    cut.dates.resize(panel.split_index + 10);
    std::ostringstream m3;
    write_model(m3, run_pipeline(cut, c).fit.model);
    CHECK(m3.str() == m1.str());
    CHECK(base.residuals.rows() == panel.split_index);
    // Coverage does look at the test rows.
    CHECK(base.coverage[0].violations != other.coverage[0].violations);
}

TEST_CASE("pipeline output is deterministic and independent of the worker count") {
    QuietWarnings w;
    const auto panel = small_panel(6);
    PipelineConfig c;
    c.samples = 20000;
    c.seed = 11;
    const auto before = worker_count();
    set_worker_count(1);
    const auto a = run_pipeline(panel, c);
    set_worker_count(3);
    const auto b = run_pipeline(panel, c);
    set_worker_count(before);
    std::ostringstream ca, cb;
    write_coverage_csv(ca, a.coverage);
    write_coverage_csv(cb, b.coverage);
    CHECK(ca.str() == cb.str());
    std::ostringstream ta, tb;
    write_tail_curves_csv(ta, a.curves);
    write_tail_curves_csv(tb, b.curves);
    CHECK(ta.str() == tb.str());
    CHECK(a.curves.size() == 6);
    CHECK(a.coverage.size() == 3);
}

TEST_CASE("pipeline command writes every output and repeats byte for byte") {
    QuietWarnings w;
    const fs::path dir = scratch_dir("pipeline");
    fs::create_directories(dir);
    const fs::path input = dir / "panel.csv";
    {
        std::ofstream out(input, std::ios::binary);
        write_panel_csv(out, small_panel(7));
    }
    PipelineConfig c;
    c.input = input.string();
    c.model = "mvnormal";
    c.samples = 20000;
    c.seed = 3;
    c.out = (dir / "out").string();
    (void)run_pipeline_command(c);
    const std::vector<std::string> files{"model.csv", "coverage.csv", "tailcurves.csv", "diagnostics.csv",
                                         "garch.csv", "manifest.txt"};
    std::vector<std::string> first;
    for (const auto& f : files) {
        REQUIRE(fs::exists(dir / "out" / f));
        first.push_back(slurp(dir / "out" / f));
    }
    (void)run_pipeline_command(c);
    for (std::size_t k = 0; k < files.size(); ++k) CHECK(slurp(dir / "out" / files[k]) == first[k]);

    const std::string manifest = first.back();
    CHECK(manifest.find("command=pipeline\n") != std::string::npos);
    CHECK(manifest.find("columns=S1;S2;S3\n") != std::string::npos);
    CHECK(manifest.find("input.fnv1a64=" + hex64(file_digest(input)) + "\n") != std::string::npos);
    CHECK(manifest.find("output.model.csv.fnv1a64=" + hex64(fnv1a64(first[0]))) != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("a failing stage is tagged and leaves no partial output") {
    QuietWarnings w;
    const fs::path dir = scratch_dir("failure");
    fs::create_directories(dir);
    const fs::path input = dir / "panel.csv";
    {
        std::ofstream out(input, std::ios::binary);
        write_panel_csv(out, small_panel(8));
    }
    PipelineConfig c;
    c.input = input.string();
    c.model = "clayton";  // bivariate only, the panel has three series
    c.samples = 20000;
    c.out = (dir / "out").string();
    try {
        (void)run_pipeline_command(c);
        FAIL("expected an error");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "fit");
        CHECK(std::string(e.what()).rfind("stage fit: ", 0) == 0);
    }
    CHECK_FALSE(fs::exists(dir / "out"));

    c.input = (dir / "missing.csv").string();
    CHECK_THROWS_WITH_AS((void)run_pipeline_command(c), doctest::Contains("stage ingest"), PipelineError);
    fs::remove_all(dir);
}

TEST_CASE("one-factor pipeline uses the first column as the market") {
    QuietWarnings w;
    const auto panel = small_panel(9);
    PipelineConfig c;
    c.samples = 20000;
    for (const std::string m : {"onefactor", "of-t"}) {
        c.model = m;
        const auto r = run_pipeline(panel, c);
        CHECK(model_dim(r.fit.model) == 3);
        CHECK(r.coverage.size() == 3);
    }
}

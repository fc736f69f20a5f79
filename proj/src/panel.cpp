#include "taildep/panel.hpp"

#include "taildep/format.hpp"
#include "taildep/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

namespace taildep {

namespace {

constexpr std::size_t kBurnIn = 1000;

bool is_missing(std::string_view field) {
    field = trim(field);
    return field.empty() || field == "NA" || field == "NaN" || field == "nan" || field == "null";
}

std::invalid_argument line_error(std::size_t line, const std::string& what) {
    return std::invalid_argument("ingest line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::optional<InputMode> parse_input_mode(std::string_view text) noexcept {
    if (text == "prices") return InputMode::Prices;
    if (text == "returns") return InputMode::Returns;
    return std::nullopt;
}

std::string_view to_string(InputMode mode) noexcept {
    return mode == InputMode::Prices ? "prices" : "returns";
}

bool is_iso_date(std::string_view text) noexcept {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    int parts[3] = {0, 0, 0};
    const std::size_t starts[3] = {0, 5, 8};
    const std::size_t lens[3] = {4, 2, 2};
    for (int p = 0; p < 3; ++p) {
        for (std::size_t k = 0; k < lens[p]; ++k) {
            const char c = text[starts[p] + k];
            if (c < '0' || c > '9') return false;
            parts[p] = parts[p] * 10 + (c - '0');
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{parts[0]},
                                          std::chrono::month{static_cast<unsigned>(parts[1])},
                                          std::chrono::day{static_cast<unsigned>(parts[2])}};
    return ymd.ok();
}

std::vector<std::string> synthetic_dates(std::size_t count) {
    using namespace std::chrono;
    std::vector<std::string> out;
    out.reserve(count);
    const sys_days start = year{2000} / January / 1;
    for (std::size_t k = 0; k < count; ++k) {
        const year_month_day d{start + days{static_cast<long>(k)}};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                      static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
        out.emplace_back(buf);
    }
    return out;
}

std::size_t split_point(std::size_t T, double split) {
    if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("split must lie in (0, 1)");
    const auto s = static_cast<std::size_t>(std::ceil(split * static_cast<double>(T)));
    if (s == 0 || s >= T) throw std::invalid_argument("split leaves an empty training or test set");
    return s;
}

void ReturnPanel::validate() const {
    if (names.size() != returns.cols()) throw std::invalid_argument("panel: one name per series required");
    if (dates.size() != returns.rows()) throw std::invalid_argument("panel: one date per row required");
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (!(dates[t - 1] < dates[t])) throw std::invalid_argument("panel: dates must be strictly increasing");
    }
    for (double x : returns.raw()) {
        if (!std::isfinite(x)) throw std::invalid_argument("panel: non-finite return");
    }
    if (split_index == 0 || split_index >= rows()) throw std::invalid_argument("panel: split index out of range");
}

ReturnPanel ingest_csv(std::istream& in, InputMode mode, const IngestOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    const auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next()) throw std::invalid_argument("ingest: empty input");
    const auto header = split_csv_line(line);
    if (header.size() < 2) throw line_error(line_no, "header needs a date column and at least one series");
    ReturnPanel panel;
    std::set<std::string> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        std::string name(trim(header[c]));
        if (name.empty()) throw line_error(line_no, "empty series name in column " + std::to_string(c + 1));
        if (!seen.insert(name).second) throw line_error(line_no, "duplicate series name '" + name + "'");
        panel.names.push_back(std::move(name));
    }
    const std::size_t n = panel.names.size();

    std::vector<std::string> dates;
    std::vector<double> values;  // row-major, retained rows only
    std::size_t dropped = 0;
    std::string last_date;
    std::vector<double> row(n);
    while (next()) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != n + 1) {
            throw line_error(line_no, "expected " + std::to_string(n + 1) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        std::string date(trim(fields[0]));
        if (!is_iso_date(date)) throw line_error(line_no, "bad date '" + date + "', expected yyyy-mm-dd");
        if (!last_date.empty() && !(last_date < date)) {
            throw line_error(line_no, "dates are not strictly increasing (" + last_date + " then " + date + ")");
        }
        last_date = date;
        bool missing = false;
        for (std::size_t c = 0; c < n; ++c) {
            if (is_missing(fields[c + 1])) {
                missing = true;
                continue;
            }
            double x = 0.0;
            try {
                x = parse_double(fields[c + 1]);
            } catch (const std::invalid_argument&) {
                throw line_error(line_no, "cannot parse '" + std::string(trim(fields[c + 1])) + "' in column '" +
                                              panel.names[c] + "'");
            }
            if (!std::isfinite(x)) {
                missing = true;
                continue;
            }
            if (mode == InputMode::Prices && !(x > 0.0)) {
                throw line_error(line_no, "price must be positive in column '" + panel.names[c] + "'");
            }
            row[c] = x;
        }
        if (missing) {
            ++dropped;
            continue;
        }
        dates.push_back(std::move(date));
        values.insert(values.end(), row.begin(), row.end());
    }
    if (dropped > 0) warn("ingest: dropped " + std::to_string(dropped) + " rows with missing values");

    const std::size_t kept = dates.size();
    const std::size_t T = mode == InputMode::Prices ? (kept > 0 ? kept - 1 : 0) : kept;
    if (T < options.min_rows) {
        throw std::invalid_argument("ingest: need at least " + std::to_string(options.min_rows) +
                                    " usable rows, got " + std::to_string(T));
    }
    panel.returns = Matrix(T, n);
    const std::size_t offset = mode == InputMode::Prices ? 1 : 0;
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t src = t + offset;
        for (std::size_t c = 0; c < n; ++c) {
            panel.returns(t, c) = mode == InputMode::Prices
                                      ? 100.0 * std::log(values[src * n + c] / values[(src - 1) * n + c])
                                      : values[src * n + c];
        }
    }
    panel.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(offset), dates.end());
    panel.split_index = split_point(T, options.split);
    return panel;
}

ReturnPanel ingest_csv_file(const std::string& path, InputMode mode, const IngestOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("ingest: cannot open '" + path + "'");
    return ingest_csv(in, mode, options);
}

void write_panel_csv(std::ostream& out, const ReturnPanel& panel) {
    out << "date";
    for (const auto& name : panel.names) out << ',' << name;
    out << '\n';
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        out << panel.dates[t];
        for (std::size_t c = 0; c < panel.cols(); ++c) out << ',' << format_double(panel.returns(t, c));
        out << '\n';
    }
}

ReturnPanel synthesize_panel(const JointSampler& innovations, std::span<const GarchParams> garch, std::size_t T,
                             std::uint64_t seed, double split) {
    const std::size_t total = T + kBurnIn;
    const Matrix z = innovations(total, derive_seed(seed, 0));
    if (z.cols() != garch.size()) {
        throw std::invalid_argument("synthesize: " + std::to_string(z.cols()) + " innovation columns for " +
                                    std::to_string(garch.size()) + " GARCH specifications");
    }
    ReturnPanel panel;
    panel.returns = Matrix(T, z.cols());
    for (std::size_t c = 0; c < z.cols(); ++c) {
        garch[c].validate();
        const auto col = z.col(c);
        double m = 0.0;
        for (double x : col) m += x;
        m /= static_cast<double>(total);
        double ss = 0.0;
        for (double x : col) ss += (x - m) * (x - m);
        const double sd = std::sqrt(ss / static_cast<double>(total));
        if (!(sd > 0.0)) throw std::invalid_argument("synthesize: constant innovation column");
        std::vector<double> eps(total);
        for (std::size_t t = 0; t < total; ++t) eps[t] = (col[t] - m) / sd;
        const auto sim = garch_drive(garch[c], eps, stationary_start(garch[c]));
        for (std::size_t t = 0; t < T; ++t) panel.returns(t, c) = sim.returns[kBurnIn + t];
        panel.names.push_back("S" + std::to_string(c + 1));
    }
    panel.dates = synthetic_dates(T);
    panel.split_index = split_point(T, split);
    return panel;
}

}  // namespace taildep

#include "taildep/model_io.hpp"

#include "taildep/format.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace taildep {

namespace {

constexpr std::string_view kMagic = "taildep-model";

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void put(std::string_view name, std::size_t r, std::size_t c, double v) {
        out_ << name << ',' << r << ',' << c << ',' << format_double(v) << '\n';
    }
    void scalar(std::string_view name, double v) { put(name, 0, 0, v); }
    void vec(std::string_view name, std::span<const double> v) {
        for (std::size_t i = 0; i < v.size(); ++i) put(name, i, 0, v[i]);
    }
    void full(std::string_view name, const Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) put(name, i, j, m(i, j));
    }
    void lower(std::string_view name, const Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j <= i; ++j) put(name, i, j, m(i, j));
    }
    void law(const LatentLaw& law) {
        scalar("latent_t", law.kind() == LatentLaw::Kind::StudentT ? 1.0 : 0.0);
        if (law.kind() == LatentLaw::Kind::StudentT) scalar("latent_df", law.df());
    }

private:
    std::ostream& out_;
};

struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
};

class Fields {
public:
    void add(std::string name, Entry e) { fields_[std::move(name)].push_back(e); }

    [[nodiscard]] const std::vector<Entry>& get(const std::string& name) const {
        const auto it = fields_.find(name);
        if (it == fields_.end()) throw std::invalid_argument("model file: missing field '" + name + "'");
        return it->second;
    }

    [[nodiscard]] double scalar(const std::string& name) const {
        const auto& e = get(name);
        if (e.size() != 1) throw std::invalid_argument("model file: field '" + name + "' must be a scalar");
        return e[0].value;
    }

    [[nodiscard]] std::vector<double> vec(const std::string& name, std::size_t n) const {
        std::vector<double> out(n);
        std::vector<bool> seen(n, false);
        for (const auto& e : get(name)) {
            if (e.row >= n || e.col != 0) throw std::invalid_argument("model file: field '" + name + "' index out of range");
            out[e.row] = e.value;
            seen[e.row] = true;
        }
        check_complete(name, seen);
        return out;
    }

    /// n x m matrix; with lower_only only j <= i is expected and the rest stays zero.
    [[nodiscard]] Matrix mat(const std::string& name, std::size_t n, std::size_t m, bool lower_only) const {
        Matrix out(n, m);
        std::vector<bool> seen(n * m, false);
        for (const auto& e : get(name)) {
            if (e.row >= n || e.col >= m || (lower_only && e.col > e.row)) {
                throw std::invalid_argument("model file: field '" + name + "' index out of range");
            }
            out(e.row, e.col) = e.value;
            seen[e.row * m + e.col] = true;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                if (lower_only && j > i) seen[i * m + j] = true;
        check_complete(name, seen);
        return out;
    }

    [[nodiscard]] std::size_t count(const std::string& name) const {
        const double v = scalar(name);
        if (!(v >= 0.0) || v != std::floor(v)) throw std::invalid_argument("model file: field '" + name + "' must be a count");
        return static_cast<std::size_t>(v);
    }

    [[nodiscard]] LatentLaw law() const {
        return scalar("latent_t") != 0.0 ? LatentLaw::student_t(scalar("latent_df")) : LatentLaw::standard_normal();
    }

private:
    static void check_complete(const std::string& name, const std::vector<bool>& seen) {
        for (bool s : seen) {
            if (!s) throw std::invalid_argument("model file: field '" + name + "' has missing entries");
        }
    }

    std::map<std::string, std::vector<Entry>> fields_;
};

void write_triangular(Writer& w, const TriangularModel& m) {
    w.scalar("dim", static_cast<double>(m.dim()));
    w.scalar("A", m.A);
    w.law(m.law);
    w.scalar("reduced", m.reduced ? 1.0 : 0.0);
    w.vec("mu", m.mu);
    w.lower("sigma", m.sigma);
    w.lower("u", m.u);
    w.lower("v", m.v);
}

TriangularModel read_triangular(const Fields& f) {
    TriangularModel m;
    const std::size_t n = f.count("dim");
    m.A = f.scalar("A");
    m.law = f.law();
    m.reduced = f.scalar("reduced") != 0.0;
    m.mu = f.vec("mu", n);
    m.sigma = f.mat("sigma", n, n, true);
    m.u = f.mat("u", n, n, true);
    m.v = f.mat("v", n, n, true);
    return m;
}

void write_onefactor(Writer& w, const OneFactorModel& m) {
    w.scalar("assets", static_cast<double>(m.asset_count()));
    w.scalar("A", m.A);
    w.law(m.law);
    w.scalar("market_alpha", m.market.alpha);
    w.scalar("market_beta", m.market.beta);
    w.scalar("market_u", m.market.u);
    w.scalar("market_v", m.market.v);
    for (std::size_t i = 0; i < m.asset_count(); ++i) {
        const auto& a = m.assets[i];
        w.put("alpha", i, 0, a.alpha);
        w.put("beta", i, 0, a.beta);
        w.put("u_market", i, 0, a.u_market);
        w.put("v_market", i, 0, a.v_market);
        w.put("gamma", i, 0, a.gamma);
        w.put("u", i, 0, a.u);
        w.put("v", i, 0, a.v);
    }
}

OneFactorModel read_onefactor(const Fields& f) {
    OneFactorModel m;
    const std::size_t n = f.count("assets");
    m.A = f.scalar("A");
    m.law = f.law();
    m.market = {f.scalar("market_alpha"), f.scalar("market_beta"), f.scalar("market_u"), f.scalar("market_v")};
    const auto alpha = f.vec("alpha", n), beta = f.vec("beta", n), um = f.vec("u_market", n),
               vm = f.vec("v_market", n), gamma = f.vec("gamma", n), u = f.vec("u", n), v = f.vec("v", n);
    for (std::size_t i = 0; i < n; ++i) m.assets.push_back({alpha[i], beta[i], um[i], vm[i], gamma[i], u[i], v[i]});
    return m;
}

void write_baseline(Writer& w, const BaselineModel& model) {
    struct Visitor {
        Writer& w;
        void operator()(const MvNormalModel& m) const {
            w.scalar("dim", static_cast<double>(m.mean.size()));
            w.vec("mean", m.mean);
            w.full("cov", m.cov);
        }
        void operator()(const MvTModel& m) const {
            w.scalar("dim", static_cast<double>(m.mean.size()));
            w.scalar("df", m.df);
            w.vec("mean", m.mean);
            w.full("scatter", m.scatter);
        }
        void operator()(const CopulaModel& m) const {
            w.scalar("theta", m.theta);
            w.scalar("margin_size", static_cast<double>(m.margins[0].size()));
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t k = 0; k < m.margins[c].size(); ++k) w.put("margin", k, c, m.margins[c][k]);
        }
        void operator()(const OneFactorBaselineModel& m) const {
            w.scalar("assets", static_cast<double>(m.alpha.size()));
            w.scalar("market_alpha", m.market_alpha);
            w.scalar("market_beta", m.market_beta);
            if (m.student) w.scalar("market_df", m.market_df);
            w.vec("alpha", m.alpha);
            w.vec("beta", m.beta);
            w.vec("gamma", m.gamma);
            if (m.student) w.vec("df", m.df);
        }
    };
    std::visit(Visitor{w}, model.params());
}

BaselineModel read_baseline(BaselineKind kind, const Fields& f) {
    switch (kind) {
        case BaselineKind::MvNormal: {
            MvNormalModel m;
            const std::size_t n = f.count("dim");
            m.mean = f.vec("mean", n);
            m.cov = f.mat("cov", n, n, false);
            return BaselineModel(std::move(m));
        }
        case BaselineKind::MvT: {
            MvTModel m;
            const std::size_t n = f.count("dim");
            m.df = f.scalar("df");
            m.mean = f.vec("mean", n);
            m.scatter = f.mat("scatter", n, n, false);
            return BaselineModel(std::move(m));
        }
        case BaselineKind::Clayton:
        case BaselineKind::Gumbel: {
            CopulaModel m;
            m.family = kind == BaselineKind::Clayton ? CopulaModel::Family::Clayton : CopulaModel::Family::Gumbel;
            m.theta = f.scalar("theta");
            const Matrix t = f.mat("margin", f.count("margin_size"), 2, false);
            for (std::size_t c = 0; c < 2; ++c) m.margins[c].assign(t.col(c).begin(), t.col(c).end());
            return BaselineModel(std::move(m));
        }
        case BaselineKind::OneFactorGaussian:
        case BaselineKind::OneFactorT: {
            OneFactorBaselineModel m;
            m.student = kind == BaselineKind::OneFactorT;
            const std::size_t n = f.count("assets");
            m.market_alpha = f.scalar("market_alpha");
            m.market_beta = f.scalar("market_beta");
            m.alpha = f.vec("alpha", n);
            m.beta = f.vec("beta", n);
            m.gamma = f.vec("gamma", n);
            if (m.student) {
                m.market_df = f.scalar("market_df");
                m.df = f.vec("df", n);
            }
            return BaselineModel(std::move(m));
        }
    }
    throw std::logic_error("model file: unknown baseline kind");
}

}  // namespace

std::string model_kind(const AnyModel& model) {
    struct Visitor {
        std::string operator()(const TriangularModel&) const { return "triangular"; }
        std::string operator()(const OneFactorModel&) const { return "onefactor"; }
        std::string operator()(const BaselineModel& b) const { return std::string(to_string(b.kind())); }
    };
    return std::visit(Visitor{}, model);
}

std::size_t model_dim(const AnyModel& model) {
    struct Visitor {
        std::size_t operator()(const TriangularModel& m) const { return m.dim(); }
        std::size_t operator()(const OneFactorModel& m) const { return m.asset_count() + 1; }
        std::size_t operator()(const BaselineModel& b) const { return b.dim(); }
    };
    return std::visit(Visitor{}, model);
}

void write_model(std::ostream& out, const AnyModel& model) {
    out << kMagic << ',' << kModelFormatVersion << '\n';
    out << "kind," << model_kind(model) << '\n';
    out << "name,row,col,value\n";
    Writer w(out);
    struct Visitor {
        Writer& w;
        void operator()(const TriangularModel& m) const { write_triangular(w, m); }
        void operator()(const OneFactorModel& m) const { write_onefactor(w, m); }
        void operator()(const BaselineModel& m) const { write_baseline(w, m); }
    };
    std::visit(Visitor{w}, model);
}

AnyModel read_model(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    const auto next = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    const auto fail = [&](const std::string& what) {
        return std::invalid_argument("model file line " + std::to_string(line_no) + ": " + what);
    };

    if (!next()) throw std::invalid_argument("model file: empty input");
    {
        const auto head = split_csv_line(line);
        if (head.size() != 2 || trim(head[0]) != kMagic) throw fail("not a taildep model file");
        if (parse_int(head[1]) != kModelFormatVersion) {
            throw fail("unsupported format version " + std::string(trim(head[1])));
        }
    }
    if (!next()) throw std::invalid_argument("model file: missing kind line");
    const auto kind_fields = split_csv_line(line);
    if (kind_fields.size() != 2 || trim(kind_fields[0]) != "kind") throw fail("expected 'kind,<name>'");
    const std::string kind(trim(kind_fields[1]));
    if (!next() || line != "name,row,col,value") throw fail("expected header 'name,row,col,value'");

    Fields fields;
    while (next()) {
        if (trim(line).empty()) continue;
        const auto parts = split_csv_line(line);
        if (parts.size() != 4) throw fail("expected 4 fields, got " + std::to_string(parts.size()));
        try {
            const long long r = parse_int(parts[1]);
            const long long c = parse_int(parts[2]);
            if (r < 0 || c < 0) throw std::invalid_argument("negative index");
            fields.add(std::string(trim(parts[0])),
                       {static_cast<std::size_t>(r), static_cast<std::size_t>(c), parse_double(parts[3])});
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
    }

    AnyModel model;
    if (kind == "triangular") {
        model = read_triangular(fields);
        std::get<TriangularModel>(model).validate();
    } else if (kind == "onefactor") {
        model = read_onefactor(fields);
        std::get<OneFactorModel>(model).validate();
    } else if (const auto b = parse_baseline_kind(kind)) {
        model = read_baseline(*b, fields);
        std::get<BaselineModel>(model).validate();
    } else {
        throw std::invalid_argument("model file: unknown kind '" + kind + "'");
    }
    return model;
}

JointSampler make_sampler(const AnyModel& model) {
    return std::visit([](const auto& m) { return make_sampler(m); }, model);
}

}  // namespace taildep

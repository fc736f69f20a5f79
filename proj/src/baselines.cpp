#include "taildep/baselines.hpp"

#include "taildep/format.hpp"
#include "taildep/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace taildep {

namespace {

using EMatrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;
using ConstMap = Eigen::Map<const EMatrix>;

ConstMap as_eigen(const Matrix& m) {
    return ConstMap(m.raw().data(), static_cast<Eigen::Index>(m.rows()),
                    static_cast<Eigen::Index>(m.cols()));
}

Matrix from_eigen(const EMatrix& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index c = 0; c < e.cols(); ++c) {
        for (Eigen::Index r = 0; r < e.rows(); ++r) {
            m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = e(r, c);
        }
    }
    return m;
}

EMatrix to_eigen(const Matrix& m) { return as_eigen(m); }

void check_spd(const Matrix& m, std::size_t n, const char* what) {
    if (m.rows() != n || m.cols() != n) {
        throw std::invalid_argument(std::string(what) + " must be " + std::to_string(n) + " x " +
                                    std::to_string(n));
    }
    const EMatrix e = to_eigen(m);
    if (!e.isApprox(e.transpose(), 1e-12)) throw std::invalid_argument(std::string(what) + " is not symmetric");
    Eigen::LLT<EMatrix> llt(e);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(std::string(what) + " is not positive definite");
    }
}

EMatrix cholesky_or_throw(const EMatrix& m, const char* what) {
    Eigen::LLT<EMatrix> llt(m);
    if (llt.info() != Eigen::Success) throw std::invalid_argument(std::string(what) + ": singular covariance");
    return llt.matrixL();
}

// Log density of a unit-variance Student t.
double std_t_logpdf(double x, double nu) {
    const double s = nu - 2.0;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(std::numbers::pi * s) -
           0.5 * (nu + 1.0) * std::log1p(x * x / s);
}

// ML df of a unit-variance Student t for standardized data, df in (2.05, 200].
double fit_std_t_df(std::span<const double> x) {
    const auto nll = [&](double log_excess) {
        const double nu = 2.0 + std::exp(log_excess);
        double s = 0.0;
        for (double xi : x) s -= std_t_logpdf(xi, nu);
        return s;
    };
    const auto r = boost::math::tools::brent_find_minima(nll, std::log(0.05), std::log(198.0), 40);
    return 2.0 + std::exp(r.first);
}

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev_of(std::span<const double> x, double m) {
    double s = 0.0;
    for (double xi : x) s += (xi - m) * (xi - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

// Merge sort of y that counts exchanges (discordant pairs).
std::uint64_t merge_count(std::vector<double>& y, std::vector<double>& buf, std::size_t lo,
                          std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t swaps = merge_count(y, buf, lo, mid) + merge_count(y, buf, mid, hi);
    std::size_t a = lo, b = mid, k = lo;
    while (a < mid && b < hi) {
        if (y[b] < y[a]) {
            swaps += mid - a;
            buf[k++] = y[b++];
        } else {
            buf[k++] = y[a++];
        }
    }
    while (a < mid) buf[k++] = y[a++];
    while (b < hi) buf[k++] = y[b++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              y.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

// Sum of t (t - 1) / 2 over runs of equal values in a sorted range.
template <class Eq>
std::uint64_t tied_pairs(std::size_t n, Eq eq) {
    std::uint64_t total = 0, run = 1;
    for (std::size_t k = 1; k < n; ++k) {
        if (eq(k - 1, k)) {
            ++run;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    return total + run * (run - 1) / 2;
}

double standard_t(Engine& e, double nu) {
    std::student_t_distribution<double> t(nu);
    return t(e) * std::sqrt((nu - 2.0) / nu);
}

double margin_lookup(const std::vector<double>& sorted, double u) {
    const auto K = static_cast<double>(sorted.size());
    const double r = std::ceil(u * K);
    const auto idx = static_cast<std::size_t>(std::clamp(r, 1.0, K)) - 1;
    return sorted[idx];
}

// Positive stable variable with Laplace transform exp(-s^alpha), 0 < alpha <= 1.
double positive_stable(Engine& e, double alpha) {
    if (alpha >= 1.0) return 1.0;
    std::uniform_real_distribution<double> unif(0.0, std::numbers::pi);
    std::exponential_distribution<double> expo(1.0);
    double th = unif(e);
    while (th <= 0.0) th = unif(e);
    const double w = expo(e);
    return std::sin(alpha * th) / std::pow(std::sin(th), 1.0 / alpha) *
           std::pow(std::sin((1.0 - alpha) * th) / w, (1.0 - alpha) / alpha);
}

template <class RowFn>
Matrix sample_rows(std::size_t n_obs, std::size_t dim, std::uint64_t seed, RowFn row_fn) {
    Matrix out(n_obs, dim);
    parallel_chunks(n_obs, kSampleChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Engine e(derive_seed(seed, chunk));
        std::vector<double> row(dim);
        for (std::size_t r = begin; r < end; ++r) {
            row_fn(e, row);
            for (std::size_t c = 0; c < dim; ++c) out(r, c) = row[c];
        }
    });
    return out;
}

BaselineModel fit_copula(CopulaModel::Family family, const Matrix& data, const BaselineOptions& options) {
    if (data.cols() != 2) throw std::invalid_argument("copula baselines are bivariate: need exactly 2 columns");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const double tk = kendall_tau(data.col(0), data.col(1));
    CopulaModel m;
    m.family = family;
    if (family == CopulaModel::Family::Clayton) {
        if (!(tk > 0.0)) {
            throw std::invalid_argument("clayton: Kendall tau " + format_double(tk) + " is not positive");
        }
        m.theta = tk >= 1.0 ? kInf : 2.0 * tk / (1.0 - tk);
    } else {
        if (tk < 0.0) {
            warn("gumbel: negative Kendall tau " + format_double(tk) + ", using the independence copula");
            m.theta = 1.0;
        } else {
            m.theta = tk >= 1.0 ? kInf : 1.0 / (1.0 - tk);
        }
    }
    if (m.theta > options.theta_max) {
        warn(std::string(family == CopulaModel::Family::Clayton ? "clayton" : "gumbel") + ": theta " +
             format_double(m.theta) + " capped at " + format_double(options.theta_max));
        m.theta = options.theta_max;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        m.margins[c].assign(data.col(c).begin(), data.col(c).end());
        std::sort(m.margins[c].begin(), m.margins[c].end());
    }
    return BaselineModel(std::move(m));
}

BaselineModel fit_onefactor_baseline(bool student, const Matrix& data) {
    if (data.cols() < 2) throw std::invalid_argument("one-factor baseline: need a market column and one asset");
    const std::size_t K = data.rows();
    OneFactorBaselineModel m;
    m.student = student;
    const auto market = data.col(0);
    m.market_alpha = mean_of(market);
    m.market_beta = stddev_of(market, m.market_alpha);
    if (!(m.market_beta > 0.0)) throw std::invalid_argument("one-factor baseline: constant market column");
    std::vector<double> zm(K);
    for (std::size_t k = 0; k < K; ++k) zm[k] = (market[k] - m.market_alpha) / m.market_beta;
    if (student) m.market_df = fit_std_t_df(zm);

    std::vector<double> resid(K);
    for (std::size_t i = 1; i < data.cols(); ++i) {
        const auto y = data.col(i);
        const double ym = mean_of(y);
        // zm has mean 0 and variance 1 by construction.
        double cov = 0.0;
        for (std::size_t k = 0; k < K; ++k) cov += (y[k] - ym) * zm[k];
        const double beta = cov / static_cast<double>(K);
        for (std::size_t k = 0; k < K; ++k) resid[k] = y[k] - ym - beta * zm[k];
        const double gamma = stddev_of(resid, 0.0);
        if (!(gamma > 0.0)) {
            throw std::invalid_argument("one-factor baseline: asset " + std::to_string(i) +
                                        " is an exact linear function of the market");
        }
        m.alpha.push_back(ym);
        m.beta.push_back(beta);
        m.gamma.push_back(gamma);
        if (student) {
            for (double& r : resid) r /= gamma;
            m.df.push_back(fit_std_t_df(resid));
        }
    }
    return BaselineModel(std::move(m));
}

}  // namespace

std::string_view to_string(BaselineKind kind) noexcept {
    switch (kind) {
        case BaselineKind::MvNormal: return "mvnormal";
        case BaselineKind::MvT: return "mvt";
        case BaselineKind::Clayton: return "clayton";
        case BaselineKind::Gumbel: return "gumbel";
        case BaselineKind::OneFactorGaussian: return "of-gaussian";
        case BaselineKind::OneFactorT: return "of-t";
    }
    return "unknown";
}

std::optional<BaselineKind> parse_baseline_kind(std::string_view text) noexcept {
    for (auto k : {BaselineKind::MvNormal, BaselineKind::MvT, BaselineKind::Clayton, BaselineKind::Gumbel,
                   BaselineKind::OneFactorGaussian, BaselineKind::OneFactorT}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

BaselineKind BaselineModel::kind() const noexcept {
    struct Visitor {
        BaselineKind operator()(const MvNormalModel&) const { return BaselineKind::MvNormal; }
        BaselineKind operator()(const MvTModel&) const { return BaselineKind::MvT; }
        BaselineKind operator()(const CopulaModel& c) const {
            return c.family == CopulaModel::Family::Clayton ? BaselineKind::Clayton : BaselineKind::Gumbel;
        }
        BaselineKind operator()(const OneFactorBaselineModel& o) const {
            return o.student ? BaselineKind::OneFactorT : BaselineKind::OneFactorGaussian;
        }
    };
    return std::visit(Visitor{}, params_);
}

std::size_t BaselineModel::dim() const noexcept {
    struct Visitor {
        std::size_t operator()(const MvNormalModel& m) const { return m.mean.size(); }
        std::size_t operator()(const MvTModel& m) const { return m.mean.size(); }
        std::size_t operator()(const CopulaModel&) const { return 2; }
        std::size_t operator()(const OneFactorBaselineModel& m) const { return m.alpha.size() + 1; }
    };
    return std::visit(Visitor{}, params_);
}

void BaselineModel::validate() const {
    struct Visitor {
        void operator()(const MvNormalModel& m) const {
            if (m.mean.empty()) throw std::invalid_argument("mvnormal: empty mean");
            check_spd(m.cov, m.mean.size(), "mvnormal covariance");
        }
        void operator()(const MvTModel& m) const {
            if (m.mean.empty()) throw std::invalid_argument("mvt: empty mean");
            check_spd(m.scatter, m.mean.size(), "mvt scatter");
            if (!(m.df > 2.0)) throw std::invalid_argument("mvt: df must exceed 2");
        }
        void operator()(const CopulaModel& m) const {
            if (m.family == CopulaModel::Family::Clayton && !(m.theta > 0.0)) {
                throw std::invalid_argument("clayton: theta must be positive");
            }
            if (m.family == CopulaModel::Family::Gumbel && !(m.theta >= 1.0)) {
                throw std::invalid_argument("gumbel: theta must be at least 1");
            }
            if (!std::isfinite(m.theta)) throw std::invalid_argument("copula: theta must be finite");
            if (m.margins[0].size() != m.margins[1].size()) {
                throw std::invalid_argument("copula: marginal tables must have equal length");
            }
            for (const auto& q : m.margins) {
                if (q.empty()) throw std::invalid_argument("copula: empty marginal table");
                if (!std::is_sorted(q.begin(), q.end())) throw std::invalid_argument("copula: marginal table not sorted");
            }
        }
        void operator()(const OneFactorBaselineModel& m) const {
            const std::size_t n = m.alpha.size();
            if (n == 0 || m.beta.size() != n || m.gamma.size() != n) {
                throw std::invalid_argument("one-factor baseline: inconsistent asset vectors");
            }
            if (!(m.market_beta > 0.0)) throw std::invalid_argument("one-factor baseline: market scale must be positive");
            for (double g : m.gamma) {
                if (!(g > 0.0)) throw std::invalid_argument("one-factor baseline: idiosyncratic scale must be positive");
            }
            if (m.student) {
                if (m.df.size() != n) throw std::invalid_argument("one-factor t: one df per asset required");
                if (!(m.market_df > 2.0)) throw std::invalid_argument("one-factor t: df must exceed 2");
                for (double d : m.df) {
                    if (!(d > 2.0)) throw std::invalid_argument("one-factor t: df must exceed 2");
                }
            }
        }
    };
    std::visit(Visitor{}, params_);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("kendall tau: length mismatch");
    if (n < 2) throw std::invalid_argument("kendall tau: need at least two observations");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
    });
    const std::uint64_t ties_x = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
    const std::uint64_t ties_xy = tied_pairs(
        n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]]; });
    std::vector<double> ys(n), buf(n);
    for (std::size_t k = 0; k < n; ++k) ys[k] = y[idx[k]];
    const std::uint64_t swaps = merge_count(ys, buf, 0, n);
    const std::uint64_t ties_y = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

    const auto n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double num = n0 - static_cast<double>(ties_x) - static_cast<double>(ties_y) +
                       static_cast<double>(ties_xy) - 2.0 * static_cast<double>(swaps);
    const double den = std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
    if (den == 0.0) throw std::invalid_argument("kendall tau: a constant column");
    return num / den;
}

MvTEstimate fit_mvt_fixed_df(const Matrix& data, double df, const MvTEstimate* warm_start) {
    if (!(df > 2.0)) throw std::invalid_argument("mvt: df must exceed 2");
    const ConstMap X = as_eigen(data);
    const auto K = X.rows();
    const auto p = static_cast<double>(X.cols());
    EVector mu;
    EMatrix S;
    if (warm_start != nullptr) {
        mu = Eigen::Map<const EVector>(warm_start->mean.data(), static_cast<Eigen::Index>(warm_start->mean.size()));
        S = to_eigen(warm_start->scatter);
    } else {
        mu = X.colwise().mean().transpose();
        const EMatrix Xc = X.rowwise() - mu.transpose();
        S = (Xc.transpose() * Xc) / static_cast<double>(K) * ((df - 2.0) / df);
    }

    const double c = std::lgamma(0.5 * (df + p)) - std::lgamma(0.5 * df) - 0.5 * p * std::log(df * std::numbers::pi);
    double loglik = -std::numeric_limits<double>::infinity();
    EVector w(K);
    for (int it = 0; it < 500; ++it) {
        const EMatrix L = cholesky_or_throw(S, "mvt");
        const EMatrix Xc = X.rowwise() - mu.transpose();
        const EMatrix D = L.triangularView<Eigen::Lower>().solve(Xc.transpose());
        const EVector delta = D.colwise().squaredNorm().transpose();
        const double logdet = 2.0 * L.diagonal().array().log().sum();
        const double ll = static_cast<double>(K) * (c - 0.5 * logdet) -
                          0.5 * (df + p) * (delta.array() / df).log1p().sum();
        w = (df + p) / (df + delta.array());
        const bool done = std::abs(ll - loglik) <= 1e-10 * std::abs(ll);
        loglik = ll;
        if (done) break;
        mu = (X.transpose() * w) / w.sum();
        const EMatrix Xn = X.rowwise() - mu.transpose();
        S = (Xn.transpose() * w.asDiagonal() * Xn) / static_cast<double>(K);
    }
    MvTEstimate est;
    est.mean.assign(mu.data(), mu.data() + mu.size());
    est.scatter = from_eigen(S);
    est.loglik = loglik;
    return est;
}

BaselineModel fit_baseline(BaselineKind kind, const Matrix& data, const BaselineOptions& options) {
    if (data.rows() < options.min_samples) {
        throw std::invalid_argument("baseline fit: need at least " + std::to_string(options.min_samples) +
                                    " observations, got " + std::to_string(data.rows()));
    }
    if (data.cols() == 0) throw std::invalid_argument("baseline fit: no columns");
    for (double x : data.raw()) {
        if (!std::isfinite(x)) throw std::invalid_argument("baseline fit: non-finite value");
    }
    switch (kind) {
        case BaselineKind::MvNormal: {
            const ConstMap X = as_eigen(data);
            const EVector mu = X.colwise().mean().transpose();
            const EMatrix Xc = X.rowwise() - mu.transpose();
            const EMatrix cov = (Xc.transpose() * Xc) / static_cast<double>(X.rows());
            (void)cholesky_or_throw(cov, "mvnormal");
            MvNormalModel m;
            m.mean.assign(mu.data(), mu.data() + mu.size());
            m.cov = from_eigen(cov);
            return BaselineModel(std::move(m));
        }
        case BaselineKind::MvT: {
            MvTModel best;
            double best_ll = -std::numeric_limits<double>::infinity();
            std::optional<MvTEstimate> prev;
            const auto steps = static_cast<int>(std::llround((options.df_max - options.df_min) / options.df_step));
            for (int s = 0; s <= steps; ++s) {
                const double df = options.df_min + options.df_step * s;
                MvTEstimate est = fit_mvt_fixed_df(data, df, prev ? &*prev : nullptr);
                if (est.loglik > best_ll) {
                    best_ll = est.loglik;
                    best.mean = est.mean;
                    best.scatter = est.scatter;
                    best.df = df;
                }
                prev = std::move(est);
            }
            return BaselineModel(std::move(best));
        }
        case BaselineKind::Clayton: return fit_copula(CopulaModel::Family::Clayton, data, options);
        case BaselineKind::Gumbel: return fit_copula(CopulaModel::Family::Gumbel, data, options);
        case BaselineKind::OneFactorGaussian: return fit_onefactor_baseline(false, data);
        case BaselineKind::OneFactorT: return fit_onefactor_baseline(true, data);
    }
    throw std::logic_error("baseline fit: unknown kind");
}

Matrix sample_baseline(const BaselineModel& model, std::size_t n_obs, std::uint64_t seed) {
    model.validate();
    struct Visitor {
        std::size_t n_obs;
        std::uint64_t seed;

        Matrix operator()(const MvNormalModel& m) const {
            const EMatrix L = cholesky_or_throw(to_eigen(m.cov), "mvnormal");
            const std::size_t p = m.mean.size();
            return sample_rows(n_obs, p, seed, [&](Engine& e, std::vector<double>& row) {
                std::normal_distribution<double> n01;
                EVector z(static_cast<Eigen::Index>(p));
                for (auto& zi : z) zi = n01(e);
                const EVector x = L * z;
                for (std::size_t c = 0; c < p; ++c) row[c] = m.mean[c] + x(static_cast<Eigen::Index>(c));
            });
        }
        Matrix operator()(const MvTModel& m) const {
            const EMatrix L = cholesky_or_throw(to_eigen(m.scatter), "mvt");
            const std::size_t p = m.mean.size();
            return sample_rows(n_obs, p, seed, [&](Engine& e, std::vector<double>& row) {
                std::normal_distribution<double> n01;
                std::chi_squared_distribution<double> chi2(m.df);
                EVector z(static_cast<Eigen::Index>(p));
                for (auto& zi : z) zi = n01(e);
                const double scale = std::sqrt(m.df / chi2(e));
                const EVector x = L * z;
                for (std::size_t c = 0; c < p; ++c) row[c] = m.mean[c] + scale * x(static_cast<Eigen::Index>(c));
            });
        }
        Matrix operator()(const CopulaModel& m) const {
            const double th = m.theta;
            return sample_rows(n_obs, 2, seed, [&](Engine& e, std::vector<double>& row) {
                std::exponential_distribution<double> expo(1.0);
                if (m.family == CopulaModel::Family::Clayton) {
                    std::gamma_distribution<double> frailty(1.0 / th, 1.0);
                    const double v = frailty(e);
                    for (std::size_t c = 0; c < 2; ++c) {
                        const double u = std::pow(1.0 + expo(e) / v, -1.0 / th);
                        row[c] = margin_lookup(m.margins[c], u);
                    }
                } else {
                    const double v = positive_stable(e, 1.0 / th);
                    for (std::size_t c = 0; c < 2; ++c) {
                        const double u = std::exp(-std::pow(expo(e) / v, 1.0 / th));
                        row[c] = margin_lookup(m.margins[c], u);
                    }
                }
            });
        }
        Matrix operator()(const OneFactorBaselineModel& m) const {
            const std::size_t n = m.alpha.size();
            return sample_rows(n_obs, n + 1, seed, [&](Engine& e, std::vector<double>& row) {
                std::normal_distribution<double> n01;
                const double zm = m.student ? standard_t(e, m.market_df) : n01(e);
                row[0] = m.market_alpha + m.market_beta * zm;
                for (std::size_t i = 0; i < n; ++i) {
                    const double zi = m.student ? standard_t(e, m.df[i]) : n01(e);
                    row[i + 1] = m.alpha[i] + m.beta[i] * zm + m.gamma[i] * zi;
                }
            });
        }
    };
    return std::visit(Visitor{n_obs, seed}, model.params());
}

JointSampler make_sampler(BaselineModel model) {
    model.validate();
    return [m = std::move(model)](std::size_t n, std::uint64_t seed) { return sample_baseline(m, n, seed); };
}

}  // namespace taildep

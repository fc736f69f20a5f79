// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance                 run all criteria
//   acceptance --criterion N   run criterion N only

#include "../test_support.hpp"

#include "taildep/baselines.hpp"
#include "taildep/common.hpp"
#include "taildep/coverage.hpp"
#include "taildep/dependence_models.hpp"
#include "taildep/garch.hpp"
#include "taildep/htqf.hpp"
#include "taildep/learning.hpp"
#include "taildep/pipeline.hpp"
#include "taildep/tail_metrics.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace taildep;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TriangularModel baseline3() {
    TriangularModel m = TriangularModel::independent(3);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            m.sigma(i, j) = (i == j) ? 1.0 : 0.5;
            m.u(i, j) = 1.0;
            m.v(i, j) = 1.5;
        }
    }
    return m;
}

std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<std::size_t> idx(x.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k;
        while (e + 1 < idx.size() && x[idx[e + 1]] == x[idx[k]]) ++e;
        for (std::size_t q = k; q <= e; ++q) r[idx[q]] = 0.5 * static_cast<double>(k + e) + 1.0;
        k = e + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson_corr(ranks(a), ranks(b));
}

double max_curve_gap(const Matrix& a, const Matrix& b, std::size_t i, std::size_t j,
                     const std::vector<double>& taus) {
    double gap = 0.0;
    for (double t : taus) {
        gap = std::max(gap, std::abs(proxy_tail_dep(a.col(i), a.col(j), t, TailSide::Down) -
                                     proxy_tail_dep(b.col(i), b.col(j), t, TailSide::Down)));
    }
    return gap;
}

bool close_tail(double fit, double truth) {
    if (truth == 1.0) return std::abs(fit - truth) <= 0.1 || std::abs(fit / truth - 1.0) <= 0.10;
    return std::abs(fit / truth - 1.0) <= 0.10;
}

// 1. Kupiec closed form.
void criterion1(Outcome& o) {
    const double a = kupiec_statistic(2076, 10, 0.01);
    const double b = kupiec_statistic(2076, 25, 0.01);
    o.detail << "T_K(10)=" << a << " T_K(25)=" << b;
    o.check(std::abs(a - 6.96) <= 0.02, "T_K(2076,10) = 6.96 +/- 0.02");
    o.check(std::abs(b - 0.82) <= 0.02, "T_K(2076,25) = 0.82 +/- 0.02");
    const int reps = 10000;
    volatile double sink = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) sink = sink + kupiec_statistic(2076, static_cast<std::size_t>(r % 60), 0.01);
    const double per_call = seconds_since(t0) / reps;
    o.detail << " per call " << per_call * 1e6 << " us";
    o.check(per_call < 1e-3, "runtime < 1 ms");
}

// 2. Tail dependence moves independently of correlation.
void criterion2(Outcome& o) {
    const std::size_t n = 1000000;
    const double tau = 1e-3;
    std::vector<double> lam, cor;
    for (double v21 : {1.0, 1.5, 2.0, 2.5, 3.0}) {
        auto m = baseline3();
        m.v(1, 0) = v21;
        const Matrix y = triangular_sample(m, n, 21);
        lam.push_back(proxy_tail_dep(y.col(0), y.col(1), tau, TailSide::Down));
        cor.push_back(pearson_corr(y.col(0), y.col(1)));
    }
    const auto [cmin, cmax] = std::minmax_element(cor.begin(), cor.end());
    o.detail << "v21 sweep: lambda " << lam.front() << " -> " << lam.back() << ", corr range " << *cmax - *cmin;
    o.check(lam.back() - lam.front() > 0.5, "lambda moves by more than 0.5 over v21 in [1, 3]");
    o.check(*cmax - *cmin < 0.15, "|delta corr| < 0.15 over the v21 sweep");

    lam.clear();
    cor.clear();
    for (int k = 0; k <= 11; ++k) {
        auto m = baseline3();
        m.sigma(1, 0) = 0.1 + 0.1 * k;
        const Matrix y = triangular_sample(m, n, 22);
        lam.push_back(proxy_tail_dep(y.col(0), y.col(1), tau, TailSide::Down));
        cor.push_back(pearson_corr(y.col(0), y.col(1)));
    }
    const double rho = spearman(lam, cor);
    o.detail << "; sigma21 sweep rank corr " << rho;
    o.check(rho > 0.9, "rank correlation of lambda and corr over sigma21 > 0.9");
}

// 3. Cross-fits in both directions.
void criterion3(Outcome& o) {
    const std::size_t n = 1000000;
    const auto taus = log_spaced(1e-3, 0.1, 12);
    const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {0, 2}, {1, 2}};

    Eigen::MatrixXd c(3, 3);
    c << 1.0, 0.3, 0.5, 0.3, 1.0, 0.7, 0.5, 0.7, 1.0;
    const Matrix t5 = testing::student_t_sample(c, 5.0, n, 3);
    const auto tri = fit_triangular(t5, QuantileGrid::levels99(), LatentLaw::standard_normal(), false);
    const Matrix tri_sample = triangular_sample(tri.model, n, 99);
    o.detail << "triangular on MvT(5) gaps";
    for (auto [i, j] : pairs) {
        const double gap = max_curve_gap(t5, tri_sample, i, j, taus);
        o.detail << " " << i + 1 << j + 1 << "=" << gap;
        o.check(gap <= 0.10, "triangular fit of MvT(5) pair " + std::to_string(i + 1) + std::to_string(j + 1) +
                                  " within 0.10");
    }

    auto gen = baseline3();
    gen.v(1, 0) = 1.2;
    gen.v(2, 1) = 2.5;
    const Matrix y = triangular_sample(gen, n, 31);
    const auto mvt = fit_baseline(BaselineKind::MvT, y);
    const Matrix mvt_sample = sample_baseline(mvt, n, 32);
    double worst = 0.0;
    o.detail << "; MvT on triangular gaps";
    for (auto [i, j] : pairs) {
        const double gap = max_curve_gap(y, mvt_sample, i, j, taus);
        o.detail << " " << i + 1 << j + 1 << "=" << gap;
        worst = std::max(worst, gap);
    }
    o.check(worst > 0.15, "MvT fit of an asymmetric triangular model misses by > 0.15 on some pair");
}

// 4. Generator recovery.
void criterion4(Outcome& o) {
    const std::size_t n = 1000000;
    const auto truth = baseline3();
    const auto fit = fit_triangular(triangular_sample(truth, n, 7), QuantileGrid::levels99(),
                                    LatentLaw::standard_normal(), false);
    double s_err = 0.0, t_err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double se = std::abs(fit.model.sigma(i, j) / truth.sigma(i, j) - 1.0);
            s_err = std::max(s_err, se);
            o.check(se <= 0.05, "sigma" + std::to_string(i + 1) + std::to_string(j + 1) + " within 5%");
            o.check(close_tail(fit.model.u(i, j), truth.u(i, j)), "u" + std::to_string(i + 1) + std::to_string(j + 1));
            o.check(close_tail(fit.model.v(i, j), truth.v(i, j)), "v" + std::to_string(i + 1) + std::to_string(j + 1));
            t_err = std::max({t_err, std::abs(fit.model.u(i, j) - truth.u(i, j)),
                              std::abs(fit.model.v(i, j) - truth.v(i, j))});
        }
    }
    o.detail << "triangular: max sigma rel err " << s_err << ", max u/v abs err " << t_err;

    OneFactorModel of;
    of.market = {0.0, 0.8, 1.5, 2.0};
    of.assets.push_back({0.1, 0.4, 1.0, 1.8, 0.6, 1.2, 1.6});
    of.assets.push_back({-0.05, 0.6, 1.3, 1.5, 0.5, 1.0, 1.4});
    of.assets.push_back({0.0, 0.3, 1.0, 2.2, 0.8, 1.5, 1.0});
    const Matrix y = onefactor_sample(of, n, 8);
    const std::vector<std::size_t> cols{1, 2, 3};
    const auto ofit = fit_onefactor(y.col(0), y.select_cols(cols), QuantileGrid::levels99(),
                                    LatentLaw::standard_normal());
    const auto& fm = ofit.model.market;
    o.check(std::abs(fm.beta / of.market.beta - 1.0) <= 0.05, "market beta within 5%");
    o.check(std::abs(fm.alpha - of.market.alpha) <= 0.05, "market alpha within 0.05");
    o.check(close_tail(fm.u, of.market.u) && close_tail(fm.v, of.market.v), "market u, v");
    double a_err = 0.0, b_err = 0.0, ab_err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& f = ofit.model.assets[i];
        const auto& t = of.assets[i];
        const std::string tag = " asset " + std::to_string(i + 1);
        const double be = std::max(std::abs(f.beta / t.beta - 1.0), std::abs(f.gamma / t.gamma - 1.0));
        b_err = std::max(b_err, be);
        a_err = std::max(a_err, std::abs(f.alpha - t.alpha));
        o.check(be <= 0.05, "beta, gamma within 5%" + tag);
        o.check(std::abs(f.alpha - t.alpha) <= 0.05, "alpha within 0.05" + tag);
        for (auto [fv, tv] : {std::pair{f.u_market, t.u_market}, {f.v_market, t.v_market}, {f.u, t.u}, {f.v, t.v}}) {
            ab_err = std::max(ab_err, std::abs(fv - tv));
            o.check(close_tail(fv, tv), "tail parameter" + tag);
        }
    }
    o.detail << "; one-factor: max beta/gamma rel err " << b_err << ", max alpha err " << a_err
             << ", max tail abs err " << ab_err;
}

// 5. GARCH oracle.
void criterion5(Outcome& o) {
    const GarchParams truth{0.05, 0.10, 0.05, 0.10, 0.85, 6.0};
    const auto sim = garch_simulate(truth, 20000, 2024);
    const auto fit = garch_fit(sim.returns);
    const auto& p = fit.params;
    const double rel[] = {p.gamma0 / truth.gamma0, p.gamma1 / truth.gamma1, p.beta0 / truth.beta0,
                          p.beta1 / truth.beta1, p.beta2 / truth.beta2};
    double worst = 0.0;
    for (double r : rel) worst = std::max(worst, std::abs(r - 1.0));
    const double nu_err = std::abs(p.nu / truth.nu - 1.0);
    o.detail << "max rel err " << worst << ", nu rel err " << nu_err;
    o.check(worst <= 0.15, "mean and variance parameters within 15%");
    o.check(nu_err <= 0.25, "nu within 25%");

    const auto eps = garch_filter(sim.returns, truth, sim.start);
    const auto again = garch_drive(truth, eps, sim.start);
    double rt = 0.0;
    for (std::size_t t = 0; t < eps.size(); ++t) {
        rt = std::max({rt, std::abs(eps[t] - sim.innovations[t]), std::abs(again.returns[t] - sim.returns[t])});
    }
    o.detail << ", roundtrip err " << rt;
    o.check(rt <= 1e-10, "filter/simulate roundtrip within 1e-10");
}

// 6. tau* at independence and comonotonicity.
void criterion6(Outcome& o) {
    const std::size_t n = 10000000;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    std::vector<double> x(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = nd(rng);
        y[k] = nd(rng);
    }
    const double ind = solve_tau_star(x, y, 0.01);
    const double com = solve_tau_star(x, x, 0.01);
    o.detail << "independent " << ind << ", comonotone " << com;
    o.check(std::abs(ind - 0.1) <= 1e-3, "independence tau* = sqrt(tau) within 1e-3");
    o.check(std::abs(com - 0.01) <= 1e-3, "comonotone tau* = tau within 1e-3");
}

const std::vector<GarchParams> kGarch3(3, GarchParams{0.05, 0.10, 0.05, 0.10, 0.85, 6.0});

// 7. Null calibration.
void criterion7(Outcome& o) {
    const auto gen = [] {
        auto m = TriangularModel::independent(3);
        for (std::size_t i = 0; i < 3; ++i) {
            m.v(i, i) = 1.5;
            for (std::size_t j = 0; j < i; ++j) m.sigma(i, j) = 0.5;
        }
        return m;
    }();
    std::vector<std::size_t> rej;
    for (std::uint64_t s = 0; s < 11; ++s) {
        const auto panel = synthesize_panel(make_sampler(gen), kGarch3, 8000, 700 + s, 0.75);
        PipelineConfig c;
        c.model = "triangular";
        c.seed = s;
        rej.push_back(run_pipeline(panel, c).rejections());
        if (s == 0) o.detail << "T_test " << panel.rows() - panel.split_index << ", rejections";
        o.detail << " " << rej.back();
    }
    std::vector<std::size_t> sorted = rej;
    std::sort(sorted.begin(), sorted.end());
    o.detail << ", median " << sorted[5];
    o.check(sorted[5] <= 1, "median rejections <= 1 of 3 pairs");
}

// 8. Power ordering.
void criterion8(Outcome& o) {
    const std::size_t n = 3;
    auto gen = TriangularModel::independent(n);
    for (std::size_t i = 0; i < n; ++i) {
        gen.u(i, i) = 1.0;
        gen.v(i, i) = 1.2;
        for (std::size_t j = 0; j < i; ++j) {
            gen.sigma(i, j) = 0.6;
            gen.u(i, j) = 1.0;
            gen.v(i, j) = 2.5;
        }
    }
    std::size_t ordered = 0, tri_better = 0, tri_worse = 0;
    std::size_t totals[3] = {0, 0, 0};
    const char* models[] = {"triangular", "mvt", "mvnormal"};
    for (std::uint64_t s = 0; s < 11; ++s) {
        const auto panel = synthesize_panel(make_sampler(gen), kGarch3, 8000, 100 + s, 0.75);
        std::size_t r[3];
        for (int m = 0; m < 3; ++m) {
            PipelineConfig c;
            c.model = models[m];
            c.seed = s;
            r[m] = run_pipeline(panel, c).rejections();
            totals[m] += r[m];
        }
        if (r[0] <= r[1] && r[1] <= r[2]) ++ordered;
        if (r[2] > r[0]) ++tri_better;
        if (r[2] < r[0]) ++tri_worse;
    }
    const boost::math::binomial half(11, 0.5);
    const double p_order = ordered == 0 ? 1.0 : boost::math::cdf(boost::math::complement(half, ordered - 1));
    const std::size_t untied = tri_better + tri_worse;
    double p_strict = 1.0;
    if (untied > 0 && tri_better > 0) {
        p_strict = boost::math::cdf(boost::math::complement(boost::math::binomial(untied, 0.5), tri_better - 1));
    }
    o.detail << "total rejections triangular " << totals[0] << ", mvt " << totals[1] << ", mvnormal " << totals[2]
             << "; ordered seeds " << ordered << "/11 (p=" << p_order << "); mvnormal > triangular on "
             << tri_better << " of " << untied << " untied seeds (p=" << p_strict << ")";
    o.check(p_order < 0.05, "sign test of triangular <= mvt <= mvnormal, p < 0.05");
    o.check(p_strict < 0.05, "strict sign test of mvnormal > triangular, p < 0.05");
}

// 9. Property suites.
void criterion9(Outcome& o) {
    // g monotone with slope bounded below.
    const double bound = 1.0 - 2.0 * std::exp(-2.0) / 4.0;
    bool mono = true;
    for (double u : {1.0, 1.7, 4.0, 25.0, 64.0}) {
        for (double v : {1.0, 1.7, 4.0, 25.0, 64.0}) {
            double prev = -INFINITY;
            for (int k = -8000; k <= 8000; ++k) {
                const double z = k * 1e-3;
                const double g = g_transform(z, u, v, 4.0);
                mono = mono && g > prev && g_derivative(z, u, v, 4.0) >= bound - 1e-12;
                prev = g;
            }
        }
    }
    o.check(mono, "g monotone with slope >= 1 - exp(-2)/2");

    // Sample quantiles of y = mu + sigma g(z) follow htqf_quantile.
    const std::size_t n = 1000000;
    const HtqfParams p{0.5, 2.0, 2.2, 1.4, 4.0};
    auto ys = htqf_sample(n, p, LatentLaw::standard_normal(), 2024);
    std::sort(ys.begin(), ys.end());
    const boost::math::normal nrm;
    double worst = 0.0;
    for (int k = 1; k <= 99; ++k) {
        const double tau = k / 100.0;
        const double z = boost::math::quantile(nrm, tau);
        const double density = boost::math::pdf(nrm, z) / (p.sigma * g_derivative(z, p.u, p.v, p.A));
        const double se = std::sqrt(tau * (1.0 - tau) / static_cast<double>(n)) / density;
        const double emp = ys[static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n))) - 1];
        worst = std::max(worst, std::abs(emp - htqf_quantile(tau, p)) / se);
    }
    o.check(worst < 5.0, "sample quantiles within 5 SE of htqf_quantile");

    // Inversion roundtrip.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> zd(-8.0, 8.0), pd(1.0, 64.0);
    double rt = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double z = zd(rng), u = pd(rng), v = pd(rng);
        rt = std::max(rt, std::abs(g_inverse(g_transform(z, u, v, 4.0), u, v, 4.0) - z));
    }
    o.check(rt < 1e-8, "g_inverse roundtrip within 1e-8");

    // Kupiec unimodal with zero at tau T.
    bool uni = true;
    for (std::size_t T : {60u, 200u, 2076u}) {
        const double tau = 0.05;
        const auto center = static_cast<std::size_t>(std::llround(tau * static_cast<double>(T)));
        for (std::size_t m = 0; m < center; ++m) uni = uni && kupiec_statistic(T, m, tau) > kupiec_statistic(T, m + 1, tau);
        for (std::size_t m = center; m < T; ++m) uni = uni && kupiec_statistic(T, m + 1, tau) > kupiec_statistic(T, m, tau);
    }
    o.check(uni, "Kupiec statistic unimodal in m");

    // Proxy estimator: argument symmetry, monotone invariance, reflection.
    const Matrix xy = testing::student_t_sample(testing::equicorrelation(2, 0.3), 4.0, 100000, 8);
    const auto x = xy.col(0), y = xy.col(1);
    std::vector<double> fx(x.size()), fy(y.size()), nx(x.size()), ny(y.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        fx[k] = std::exp(x[k]) + 3.0;
        fy[k] = y[k] * y[k] * y[k];
        nx[k] = -x[k];
        ny[k] = -y[k];
    }
    bool prox = true;
    for (double tau : {0.001, 0.005, 0.02, 0.1, 0.3}) {
        for (TailSide side : {TailSide::Down, TailSide::Up}) {
            const double base = proxy_tail_dep(x, y, tau, side);
            prox = prox && proxy_tail_dep(y, x, tau, side) == base && proxy_tail_dep(fx, fy, tau, side) == base;
        }
        prox = prox && proxy_tail_dep(x, y, tau, TailSide::Down) == proxy_tail_dep(nx, ny, tau, TailSide::Up);
    }
    o.check(prox, "proxy estimator symmetric, monotone invariant and reflection consistent");
    o.detail << "quantile agreement worst " << worst << " SE, roundtrip err " << rt;
}

const std::function<void(Outcome&)> kCriteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                   criterion6, criterion7, criterion8, criterion9};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--criterion" && a + 1 < argc) {
            only = std::atoi(argv[++a]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
            return 2;
        }
    }
    if (only < 0 || only > 9) {
        std::fprintf(stderr, "criterion must be 1..9\n");
        return 2;
    }
    set_warning_sink([](std::string_view) {});
    bool all = true;
    for (int k = 1; k <= 9; ++k) {
        if (only != 0 && k != only) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            kCriteria[k - 1](o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        std::printf("criterion %d: %s (%.1fs) %s\n", k, o.pass ? "PASS" : "FAIL", seconds_since(t0),
                    o.detail.str().c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}

#include "doctest.h"
#include "test_support.hpp"

#include "taildep/garch.hpp"

#include <cmath>
#include <random>

using namespace taildep;
using namespace taildep::testing;

namespace {

const GarchParams kReference{0.05, 0.10, 0.05, 0.10, 0.85, 6.0};

double lag1_autocorr(const std::vector<double>& x) {
    const double m = mean(x);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - m) * (x[t] - m);
        if (t > 0) num += (x[t] - m) * (x[t - 1] - m);
    }
    return num / den;
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(kReference.validate());
    auto p = kReference;
    p.beta0 = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = kReference;
    p.beta2 = 0.95;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = kReference;
    p.nu = 2.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = kReference;
    p.beta1 = -0.1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("forecast recursion by hand") {
    const GarchParams p{0.0, 0.0, 0.05, 0.1, 0.85, 6.0};
    const GarchState s{1.0, 2.0, 1.0};
    const auto f = garch_forecast(p, s);
    CHECK(f.sigma * f.sigma == doctest::Approx(1.30).epsilon(1e-14));
    CHECK(f.mu == 0.0);

    const GarchParams flat{0.3, 0.0, 2.0, 0.0, 0.0, 6.0};
    for (const GarchState st : {GarchState{1.0, 2.0, 1.0}, GarchState{9.0, -3.0, 5.0}}) {
        const auto g = garch_forecast(flat, st);
        CHECK(g.sigma == doctest::Approx(std::sqrt(2.0)));
        CHECK(g.mu == 0.3);
    }

    const GarchParams ar{0.1, 0.5, 1.0, 0.0, 0.0, 6.0};
    CHECK(garch_forecast(ar, GarchState{1.0, 0.0, 2.0}).mu == doctest::Approx(1.1));
}

TEST_CASE("advance updates the state with the realized return") {
    const GarchState s{1.0, 0.5, 0.2};
    const auto f = garch_forecast(kReference, s);
    const auto next = garch_advance(kReference, s, 1.7);
    CHECK(next.r == 1.7);
    CHECK(next.sigma2 == doctest::Approx(f.sigma * f.sigma));
    CHECK(next.eps == doctest::Approx((1.7 - f.mu) / f.sigma));
}

TEST_CASE("constant-variance filter is the AR residual") {
    const GarchParams p{0.2, 0.3, 4.0, 0.0, 0.0, 6.0};
    const std::vector<double> r{1.0, -0.5, 2.0, 0.3, 0.0};
    const GarchStart start{0.0, 4.0};
    const auto eps = garch_filter(r, p, start);
    CHECK(eps[0] == doctest::Approx(0.5));
    for (std::size_t t = 1; t < r.size(); ++t) {
        CHECK(eps[t] == doctest::Approx((r[t] - 0.2 - 0.3 * r[t - 1]) / 2.0).epsilon(1e-14));
    }
}

TEST_CASE("simulate and filter are inverse") {
    const auto sim = garch_simulate(kReference, 5000, 17);
    REQUIRE(sim.returns.size() == 5000);
    const auto eps = garch_filter(sim.returns, kReference, sim.start);
    double worst = 0.0;
    for (std::size_t t = 0; t < eps.size(); ++t) worst = std::max(worst, std::abs(eps[t] - sim.innovations[t]));
    CHECK(worst < 1e-10);

    const auto again = garch_drive(kReference, eps, sim.start);
    for (std::size_t t = 0; t < eps.size(); ++t) {
        CHECK(again.returns[t] == doctest::Approx(sim.returns[t]).epsilon(1e-12));
    }
}

TEST_CASE("simulation is deterministic per seed") {
    CHECK(garch_simulate(kReference, 100, 3).returns == garch_simulate(kReference, 100, 3).returns);
    CHECK(garch_simulate(kReference, 100, 3).returns != garch_simulate(kReference, 100, 4).returns);
}

TEST_CASE("constant-variance simulation has variance beta0") {
    const GarchParams p{0.0, 0.0, 2.5, 0.0, 0.0, 6.0};
    const auto sim = garch_simulate(p, 400000, 5);
    const double v = stddev(sim.returns) * stddev(sim.returns);
    CHECK(std::abs(v / 2.5 - 1.0) < 0.03);
    const double iv = stddev(sim.innovations) * stddev(sim.innovations);
    CHECK(std::abs(iv - 1.0) < 0.03);
}

TEST_CASE("long simulation matches the stationary variance") {
    const GarchParams p{0.0, 0.0, 0.05, 0.10, 0.85, 8.0};
    const auto sim = garch_simulate(p, 1000000, 6);
    const double v = stddev(sim.returns) * stddev(sim.returns);
    CHECK(std::abs(v / (0.05 / 0.05) - 1.0) < 0.05);
}

TEST_CASE("filtering with the true parameters whitens squared residuals") {
    const auto sim = garch_simulate(kReference, 20000, 7);
    const auto eps = garch_filter(sim.returns, kReference);
    std::vector<double> sq(eps.size());
    for (std::size_t t = 0; t < eps.size(); ++t) sq[t] = eps[t] * eps[t];
    CHECK(std::abs(lag1_autocorr(sq)) < 3.0 / std::sqrt(static_cast<double>(eps.size())));
    CHECK(std::abs(mean(eps)) < 0.05);
    CHECK(std::abs(stddev(eps) - 1.0) < 0.05);
}

TEST_CASE("fit rejects short and constant series") {
    const std::vector<double> short_series(100, 0.1);
    CHECK_THROWS_AS((void)garch_fit(short_series), std::invalid_argument);
    const std::vector<double> flat(1000, 0.0);
    CHECK_THROWS_WITH_AS((void)garch_fit(flat), doctest::Contains("zero variance"), std::invalid_argument);
}

TEST_CASE("fit on i.i.d. normal returns") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    std::vector<double> r(10000);
    for (double& x : r) x = n01(rng);
    const auto fit = garch_fit(r);
    CHECK(fit.params.beta1 < 0.05);
    CHECK(fit.params.nu > 20.0);
    CHECK(std::abs(fit.params.gamma1) < 0.05);
    CHECK(fit.params.beta1 + fit.params.beta2 < 1.0);

    // The maximizer beats the initializer.
    const GarchParams init{mean(r), 0.0, 0.05 * stddev(r) * stddev(r), 0.05, 0.9, 6.0};
    CHECK(fit.loglik >= garch_loglik(r, init));
    CHECK(fit.loglik == doctest::Approx(garch_loglik(r, fit.params)));
}

TEST_CASE("fit recovers simulated parameters") {
    const auto sim = garch_simulate(kReference, 20000, 2024);
    const auto fit = garch_fit(sim.returns);
    const auto& p = fit.params;
    CHECK(std::abs(p.gamma0 / 0.05 - 1.0) < 0.15);
    CHECK(std::abs(p.gamma1 / 0.10 - 1.0) < 0.15);
    CHECK(std::abs(p.beta0 / 0.05 - 1.0) < 0.15);
    CHECK(std::abs(p.beta1 / 0.10 - 1.0) < 0.15);
    CHECK(std::abs(p.beta2 / 0.85 - 1.0) < 0.15);
    CHECK(std::abs(p.nu / 6.0 - 1.0) < 0.25);
    CHECK_FALSE(fit.near_integrated);

    // The stored state forecasts the day after the sample.
    const auto f = garch_forecast(fit);
    const auto s = fit.last_state;
    CHECK(f.mu == doctest::Approx(p.gamma0 + p.gamma1 * sim.returns.back()));
    CHECK(f.sigma * f.sigma ==
          doctest::Approx(p.beta0 + p.beta1 * s.sigma2 * s.eps * s.eps + p.beta2 * s.sigma2));
}

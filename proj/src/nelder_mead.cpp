#include "taildep/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace taildep {

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> start,
                             std::span<const double> step, const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    if (n == 0 || step.size() != n) {
        throw std::invalid_argument("nelder_mead: start and step must be non-empty and equal size");
    }

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    std::vector<double> best_history;
    best_history.reserve(options.max_iterations + 1);

    auto point = [&](double t, const std::vector<double>& from, std::vector<double>& out) {
        // out = centroid + t * (from - centroid)
        for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (from[k] - centroid[k]);
    };

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        best_history.push_back(values[best]);
        const std::size_t it = best_history.size() - 1;
        if (it >= options.stall_window &&
            best_history[it - options.stall_window] - values[best] < options.stall_tolerance) {
            result.converged = true;
            break;
        }
        double spread = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                spread = std::max(spread, std::abs(simplex[i][k] - simplex[best][k]));
            }
        }
        if (values[worst] - values[best] <= options.value_tolerance &&
            spread <= options.position_tolerance) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        point(-1.0, simplex[worst], trial);  // reflection
        const double fr = eval(trial);
        if (fr < values[best]) {
            point(-2.0, simplex[worst], trial2);  // expansion
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        if (fr < values[worst]) {
            point(-0.5, simplex[worst], trial2);  // outside contraction
            const double fc = eval(trial2);
            if (fc <= fr) {
                simplex[worst] = trial2;
                values[worst] = fc;
                continue;
            }
        } else {
            point(0.5, simplex[worst], trial2);  // inside contraction
            const double fc = eval(trial2);
            if (fc < values[worst]) {
                simplex[worst] = trial2;
                values[worst] = fc;
                continue;
            }
        }
        for (std::size_t i = 0; i <= n; ++i) {  // shrink toward best
            if (i == best) continue;
            for (std::size_t k = 0; k < n; ++k) {
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            }
            values[i] = eval(simplex[i]);
        }
    }

    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best = static_cast<std::size_t>(best_it - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

}  // namespace taildep

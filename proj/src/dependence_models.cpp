#include "taildep/dependence_models.hpp"
#include "taildep/simd/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace taildep {
namespace {

std::string entry(const char* name, std::size_t i, std::size_t j) {
    return std::string(name) + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

TriangularModel TriangularModel::independent(std::size_t n) {
    TriangularModel m;
    m.mu.assign(n, 0.0);
    m.sigma = Matrix(n, n);
    m.u = Matrix(n, n);
    m.v = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m.sigma(i, i) = 1.0;
        for (std::size_t j = 0; j <= i; ++j) {
            m.u(i, j) = 1.0;
            m.v(i, j) = 1.0;
        }
    }
    return m;
}

void TriangularModel::validate() const {
    const std::size_t n = dim();
    if (n == 0) throw std::invalid_argument("triangular model needs at least one dimension");
    for (const Matrix* m : {&sigma, &u, &v}) {
        if (m->rows() != n || m->cols() != n) {
            throw std::invalid_argument("triangular model matrices must be n x n");
        }
    }
    if (!(A >= kMinA)) throw std::invalid_argument("tail constant A must be >= 3");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(mu[i])) throw std::invalid_argument("mu must be finite");
        if (!(sigma(i, i) > 0.0)) {
            throw std::invalid_argument(entry("sigma", i, i) + " must be > 0");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j > i) {
                if (sigma(i, j) != 0.0 || u(i, j) != 0.0 || v(i, j) != 0.0) {
                    throw std::invalid_argument("upper-triangle entry " + entry("", i, j) +
                                                " must be zero");
                }
                continue;
            }
            if (!std::isfinite(sigma(i, j))) {
                throw std::invalid_argument(entry("sigma", i, j) + " must be finite");
            }
            if (!(u(i, j) >= 1.0 && u(i, j) <= kTailParamMax)) {
                throw std::invalid_argument(entry("u", i, j) + " must lie in [1, 64]");
            }
            if (!(v(i, j) >= 1.0 && v(i, j) <= kTailParamMax)) {
                throw std::invalid_argument(entry("v", i, j) + " must lie in [1, 64]");
            }
            if (reduced && j < i && (u(i, j) != u(j, j) || v(i, j) != v(j, j))) {
                throw std::invalid_argument("reduced model requires " + entry("u", i, j) + " = " +
                                            entry("u", j, j) + " and likewise for v");
            }
        }
    }
}

std::size_t TriangularModel::parameter_count() const noexcept {
    return reduced ? reduced_parameter_count(dim()) : full_parameter_count(dim());
}

HtqfParams TriangularModel::diagonal(std::size_t i) const {
    return {mu.at(i), sigma(i, i), u(i, i), v(i, i), A};
}

void OneFactorModel::validate() const {
    if (!(A >= kMinA)) throw std::invalid_argument("tail constant A must be >= 3");
    if (!(market.beta > 0.0)) throw std::invalid_argument("market beta must be > 0");
    validate_tail_params(market.u, market.v, A);
    for (std::size_t i = 0; i < assets.size(); ++i) {
        const auto& a = assets[i];
        const std::string tag = "asset " + std::to_string(i) + ": ";
        if (!(a.gamma > 0.0)) throw std::invalid_argument(tag + "gamma must be > 0");
        if (!std::isfinite(a.alpha) || !std::isfinite(a.beta)) {
            throw std::invalid_argument(tag + "alpha and beta must be finite");
        }
        try {
            validate_tail_params(a.u_market, a.v_market, A);
            validate_tail_params(a.u, a.v, A);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(tag + e.what());
        }
    }
}

Matrix apply_triangular(const TriangularModel& model, const Matrix& z) {
    model.validate();
    const std::size_t n = model.dim();
    if (z.cols() != n) throw std::invalid_argument("apply_triangular: latent width mismatch");
    Matrix y(z.rows(), n);
    for (std::size_t i = 0; i < n; ++i) {
        auto out = y.col(i);
        std::fill(out.begin(), out.end(), model.mu[i]);
        for (std::size_t j = 0; j <= i; ++j) {
            if (model.sigma(i, j) == 0.0) continue;
            simd::g_accumulate(z.col(j), model.sigma(i, j), model.u(i, j), model.v(i, j), model.A,
                               out);
        }
    }
    return y;
}

Matrix apply_onefactor(const OneFactorModel& model, const Matrix& z) {
    model.validate();
    const std::size_t n = model.asset_count();
    if (z.cols() != n + 1) throw std::invalid_argument("apply_onefactor: latent width mismatch");
    Matrix y(z.rows(), n + 1);
    auto market = y.col(0);
    std::fill(market.begin(), market.end(), model.market.alpha);
    simd::g_accumulate(z.col(0), model.market.beta, model.market.u, model.market.v, model.A,
                       market);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = model.assets[i];
        auto out = y.col(i + 1);
        std::fill(out.begin(), out.end(), a.alpha);
        if (a.beta != 0.0) {
            simd::g_accumulate(z.col(0), a.beta, a.u_market, a.v_market, model.A, out);
        }
        simd::g_accumulate(z.col(i + 1), a.gamma, a.u, a.v, model.A, out);
    }
    return y;
}

Matrix triangular_sample(const TriangularModel& model, std::size_t n_obs, std::uint64_t seed) {
    model.validate();
    return apply_triangular(model, sample_latent_matrix(model.law, n_obs, model.dim(), seed));
}

Matrix onefactor_sample(const OneFactorModel& model, std::size_t n_obs, std::uint64_t seed) {
    model.validate();
    return apply_onefactor(model,
                           sample_latent_matrix(model.law, n_obs, model.asset_count() + 1, seed));
}

TriangularModel to_triangular(const OneFactorModel& model) {
    model.validate();
    const std::size_t d = model.asset_count() + 1;
    TriangularModel t = TriangularModel::independent(d);
    t.A = model.A;
    t.law = model.law;
    t.mu[0] = model.market.alpha;
    t.sigma(0, 0) = model.market.beta;
    t.u(0, 0) = model.market.u;
    t.v(0, 0) = model.market.v;
    for (std::size_t i = 1; i < d; ++i) {
        const auto& a = model.assets[i - 1];
        t.mu[i] = a.alpha;
        t.sigma(i, 0) = a.beta;
        t.u(i, 0) = a.u_market;
        t.v(i, 0) = a.v_market;
        t.sigma(i, i) = a.gamma;
        t.u(i, i) = a.u;
        t.v(i, i) = a.v;
    }
    return t;
}

JointSampler make_sampler(TriangularModel model) {
    model.validate();
    return [m = std::move(model)](std::size_t n, std::uint64_t seed) {
        return triangular_sample(m, n, seed);
    };
}

JointSampler make_sampler(OneFactorModel model) {
    model.validate();
    return [m = std::move(model)](std::size_t n, std::uint64_t seed) {
        return onefactor_sample(m, n, seed);
    };
}

}  // namespace taildep

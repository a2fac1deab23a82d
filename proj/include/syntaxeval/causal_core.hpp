#pragma once

// Propensity-score machinery on dense Eigen types, templated on the scalar.
// Logistic regression by IRLS, IPW effect estimates, cluster bootstrap and
// placebo permutation. The record-level API lives in causal.hpp.

#include "syntaxeval/error.hpp"
#include "syntaxeval/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace syntaxeval::causal {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct FitOptions {
    double ridge = 1e-6;  // on the slopes, not the intercept
    double tolerance = 1e-8;
    int max_iterations = 100;
};

template <typename Derived>
auto logistic(const Eigen::MatrixBase<Derived>& eta) {
    using Scalar = typename Derived::Scalar;
    return eta.unaryExpr([](Scalar e) {
        if (e >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-e));
        const Scalar z = std::exp(e);
        return z / (Scalar(1) + z);
    });
}

// log(1 + exp(e)) without overflow
template <typename Scalar>
Scalar softplus(Scalar e) {
    return std::max(e, Scalar(0)) + std::log1p(std::exp(-std::abs(e)));
}

template <typename Scalar>
Scalar penalized_log_likelihood(const MatrixX<Scalar>& x, const VectorX<Scalar>& t, const VectorX<Scalar>& beta,
                                Scalar ridge) {
    const VectorX<Scalar> eta = x * beta;
    Scalar ll(0);
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += t(i) * eta(i) - softplus(eta(i));
    return ll - ridge / Scalar(2) * beta.tail(beta.size() - 1).squaredNorm();
}

template <typename Scalar>
VectorX<Scalar> penalized_gradient(const MatrixX<Scalar>& x, const VectorX<Scalar>& t, const VectorX<Scalar>& beta,
                                   Scalar ridge) {
    const VectorX<Scalar> p = logistic(x * beta);
    VectorX<Scalar> g = x.transpose() * (t - p);
    g.tail(g.size() - 1) -= ridge * beta.tail(beta.size() - 1);
    return g;
}

template <typename Scalar>
struct PropensityModel {
    VectorX<Scalar> coefficients;  // intercept, then one per kept feature
    VectorX<Scalar> mean;          // of kept features
    VectorX<Scalar> scale;
    std::vector<Eigen::Index> kept;
    std::vector<Eigen::Index> dropped;  // zero variance
    bool converged = false;
    int iterations = 0;

    // intercept column plus standardized kept features
    [[nodiscard]] MatrixX<Scalar> design(const MatrixX<Scalar>& z) const {
        MatrixX<Scalar> x(z.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
        x.col(0).setOnes();
        for (std::size_t k = 0; k < kept.size(); ++k) {
            const auto c = static_cast<Eigen::Index>(k);
            x.col(c + 1) = (z.col(kept[k]).array() - mean(c)) / scale(c);
        }
        return x;
    }

    [[nodiscard]] VectorX<Scalar> predict(const MatrixX<Scalar>& z) const { return logistic(design(z) * coefficients); }
};

template <typename Scalar>
PropensityModel<Scalar> fit_propensity(const MatrixX<Scalar>& z, const VectorX<Scalar>& t, const FitOptions& opt = {}) {
    const Eigen::Index n = z.rows();
    if (n == 0 || t.size() != n) throw Error("fit_propensity: empty or mismatched design");
    const Scalar treated = t.sum();
    if (treated <= Scalar(0) || treated >= Scalar(n)) throw Error("fit_propensity: both arms must be present");

    PropensityModel<Scalar> m;
    std::vector<Scalar> means, scales;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        if (z.col(c).maxCoeff() == z.col(c).minCoeff()) {
            m.dropped.push_back(c);
            continue;
        }
        const Scalar mu = z.col(c).mean();
        const Scalar sd = std::sqrt((z.col(c).array() - mu).square().mean());
        m.kept.push_back(c);
        means.push_back(mu);
        scales.push_back(sd);
    }
    const auto p = static_cast<Eigen::Index>(m.kept.size());
    m.mean = Eigen::Map<const VectorX<Scalar>>(means.data(), p);
    m.scale = Eigen::Map<const VectorX<Scalar>>(scales.data(), p);

    const MatrixX<Scalar> x = m.design(z);
    const Scalar ridge = static_cast<Scalar>(opt.ridge);
    VectorX<Scalar> beta = VectorX<Scalar>::Zero(p + 1);
    beta(0) = std::log(treated / (Scalar(n) - treated));
    VectorX<Scalar> penalty = VectorX<Scalar>::Constant(p + 1, ridge);
    penalty(0) = Scalar(0);

    Scalar ll = penalized_log_likelihood(x, t, beta, ridge);
    for (int it = 1; it <= opt.max_iterations; ++it) {
        m.iterations = it;
        const VectorX<Scalar> prob = logistic(x * beta);
        const VectorX<Scalar> w = (prob.array() * (Scalar(1) - prob.array())).matrix();
        VectorX<Scalar> g = x.transpose() * (t - prob);
        g -= penalty.cwiseProduct(beta);
        MatrixX<Scalar> h = x.transpose() * w.asDiagonal() * x;
        h.diagonal() += penalty;
        VectorX<Scalar> step = h.ldlt().solve(g);
        if (!step.allFinite()) break;

        // step halving keeps the penalized likelihood from going down
        Scalar s(1);
        VectorX<Scalar> next = beta + step;
        Scalar ll_next = penalized_log_likelihood(x, t, next, ridge);
        for (int halve = 0; halve < 40 && !(ll_next >= ll - std::abs(ll) * Scalar(1e-12)); ++halve) {
            s /= Scalar(2);
            next = beta + s * step;
            ll_next = penalized_log_likelihood(x, t, next, ridge);
        }
        const Scalar moved = (s * step).cwiseAbs().maxCoeff();
        beta = next;
        ll = ll_next;
        if (moved < static_cast<Scalar>(opt.tolerance)) {
            m.converged = true;
            break;
        }
    }
    m.coefficients = beta;
    return m;
}

template <typename Scalar>
struct AteEstimate {
    Scalar tau;
    Scalar tau_naive;
};

// Stabilized (normalized) IPW difference after trimming p to [lo, hi].
template <typename Scalar>
AteEstimate<Scalar> estimate_ate_ipw(const VectorX<Scalar>& y, const VectorX<Scalar>& t,
                                     const VectorX<Scalar>& propensity, Scalar lo = Scalar(0.01),
                                     Scalar hi = Scalar(0.99)) {
    Scalar w1(0), w0(0), s1(0), s0(0), n1(0), n0(0), m1(0), m0(0);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Scalar p = std::clamp(propensity(i), lo, hi);
        if (t(i) > Scalar(0.5)) {
            w1 += Scalar(1) / p;
            s1 += y(i) / p;
            n1 += Scalar(1);
            m1 += y(i);
        } else {
            w0 += Scalar(1) / (Scalar(1) - p);
            s0 += y(i) / (Scalar(1) - p);
            n0 += Scalar(1);
            m0 += y(i);
        }
    }
    if (n1 == Scalar(0) || n0 == Scalar(0)) throw Error("estimate_ate_ipw: an arm is empty");
    return {s1 / w1 - s0 / w0, m1 / n1 - m0 / n0};
}

// linear interpolation between order statistics
template <typename Scalar>
Scalar quantile(std::vector<Scalar> v, double q) {
    if (v.empty()) throw Error("quantile of nothing");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + static_cast<Scalar>(h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Rows with their treatment flag, outcome columns and cluster (snippet) index.
template <typename Scalar>
struct Design {
    MatrixX<Scalar> z;
    VectorX<Scalar> t;
    MatrixX<Scalar> y;  // one column per outcome
    std::vector<std::size_t> cluster;
};

struct BootstrapOptions {
    std::size_t resamples = 500;
    bool refit = true;
    std::uint64_t seed = 0;
    double level = 0.95;
    FitOptions fit;
};

template <typename Scalar>
struct BootstrapResult {
    Scalar tau_mean;
    Scalar ci_low;
    Scalar ci_high;
    Scalar tau_std;
};

namespace detail {

template <typename Scalar>
bool both_arms(const VectorX<Scalar>& t) {
    const Scalar s = t.sum();
    return s > Scalar(0) && s < Scalar(t.size());
}

}  // namespace detail

// Resamples clusters with replacement; rows of a cluster stay together.
// One result per outcome column.
template <typename Scalar>
std::vector<BootstrapResult<Scalar>> bootstrap_ate(const Design<Scalar>& d, const BootstrapOptions& o) {
    const Eigen::Index n = d.z.rows();
    if (!detail::both_arms(d.t)) throw Error("bootstrap_ate: both arms must be present");
    std::size_t clusters = 0;
    for (auto c : d.cluster) clusters = std::max(clusters, c + 1);
    std::vector<std::vector<Eigen::Index>> members(clusters);
    for (Eigen::Index i = 0; i < n; ++i) members[d.cluster[static_cast<std::size_t>(i)]].push_back(i);

    VectorX<Scalar> base_p;
    if (!o.refit) base_p = fit_propensity(d.z, d.t, o.fit).predict(d.z);

    const auto outcomes = static_cast<std::size_t>(d.y.cols());
    std::vector<std::vector<Scalar>> taus(outcomes);
    std::vector<Eigen::Index> rows;
    for (std::size_t b = 0; b < o.resamples; ++b) {
        VectorX<Scalar> tb;
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt == 1000) throw Error("bootstrap_ate: resamples keep missing an arm");
            Rng rng(derive_seed(o.seed, {b, attempt}));
            rows.clear();
            for (std::size_t k = 0; k < clusters; ++k) {
                const auto& m = members[uniform_index(rng, clusters)];
                rows.insert(rows.end(), m.begin(), m.end());
            }
            tb = d.t(rows);
            if (detail::both_arms(tb)) break;
        }
        VectorX<Scalar> pb;
        if (o.refit) {
            const MatrixX<Scalar> zb = d.z(rows, Eigen::all);
            pb = fit_propensity(zb, tb, o.fit).predict(zb);
        } else {
            pb = base_p(rows);
        }
        for (std::size_t k = 0; k < outcomes; ++k) {
            const VectorX<Scalar> yb = d.y.col(static_cast<Eigen::Index>(k))(rows);
            taus[k].push_back(estimate_ate_ipw(yb, tb, pb).tau);
        }
    }

    std::vector<BootstrapResult<Scalar>> out;
    const double alpha = (1.0 - o.level) / 2.0;
    for (auto& v : taus) {
        const Eigen::Map<const VectorX<Scalar>> m(v.data(), static_cast<Eigen::Index>(v.size()));
        const Scalar mean = m.mean();
        const Scalar sd = v.size() > 1 ? std::sqrt((m.array() - mean).square().sum() / Scalar(v.size() - 1)) : Scalar(0);
        out.push_back({mean, quantile(v, alpha), quantile(v, 1.0 - alpha), sd});
    }
    return out;
}

// Treatment labels permuted (arm sizes kept), propensity refit, IPW re-estimated.
template <typename Scalar>
VectorX<Scalar> placebo_refute(const Design<Scalar>& d, std::uint64_t seed, const FitOptions& fit = {}) {
    if (!detail::both_arms(d.t)) throw Error("placebo_refute: both arms must be present");
    VectorX<Scalar> t = d.t;
    Rng rng(derive_seed(seed, {hash_string("placebo")}));
    for (Eigen::Index i = t.size() - 1; i > 0; --i) {
        std::swap(t(i), t(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(i) + 1))));
    }
    const VectorX<Scalar> p = fit_propensity(d.z, t, fit).predict(d.z);
    VectorX<Scalar> out(d.y.cols());
    for (Eigen::Index k = 0; k < d.y.cols(); ++k) out(k) = estimate_ate_ipw(VectorX<Scalar>(d.y.col(k)), t, p).tau;
    return out;
}

}  // namespace syntaxeval::causal

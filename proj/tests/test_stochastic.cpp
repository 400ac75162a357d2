#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "scz/gamma.hpp"
#include "scz/kernel.hpp"
#include "scz/stochastic.hpp"

using namespace scz;

namespace {

const FiniteDimSpace R1 = FiniteDimSpace::euclidean(1);

AdaptedProcess constant_one(const Grid& g) {
    return AdaptedProcess::deterministic(g, R1, 1, [](double) { return scalar_mat(1.0); });
}

struct Sample {
    double mean, var, var_err;
};

// sample mean, variance and the standard error of the variance
Sample moments(const std::vector<double>& x) {
    double n = double(x.size()), m = 0, v = 0, m4 = 0;
    for (double a : x) m += a;
    m /= n;
    for (double a : x) v += (a - m) * (a - m), m4 += std::pow(a - m, 4);
    v /= n - 1;
    m4 /= n;
    return {m, v, std::sqrt(std::max(0.0, m4 - v * v) / n)};
}

}  // namespace

TEST(Brownian, IncrementStatistics) {
    Grid g(1, 1.0, 64);
    const std::size_t paths = 4000;
    std::vector<double> a, b, ab;
    for (std::size_t r = 0; r < paths; ++r) {
        auto W = BrownianPath::sample(g, 2, 9, r);
        a.push_back(W.dW(10, 0) / std::sqrt(g.width()));
        b.push_back(W.dW(10, 1) / std::sqrt(g.width()));
        ab.push_back(a.back() * b.back());
    }
    auto sa = moments(a), sab = moments(ab);
    EXPECT_LT(std::abs(sa.mean), 3 / std::sqrt(double(paths)));
    EXPECT_NEAR(sa.var, 1.0, 3 * sa.var_err);
    EXPECT_LT(std::abs(sab.mean), 3 * std::sqrt(sab.var / paths));
}

TEST(Brownian, SeedDeterminism) {
    Grid g(1, 2.0, 128);
    auto A = BrownianPath::sample(g, 3, 17, 5), B = BrownianPath::sample(g, 3, 17, 5), C = BrownianPath::sample(g, 3, 18, 5);
    bool diff = false;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(A.dW(i, k), B.dW(i, k));
            diff = diff || A.dW(i, k) != C.dW(i, k);
        }
    EXPECT_TRUE(diff);
}

TEST(Ito, ZeroAndConstant) {
    Grid g(1, 1.0, 64);
    auto Z = AdaptedProcess::deterministic(g, R1, 1, [](double) { return scalar_mat(0.0); });
    auto W0 = BrownianPath::sample(g, 1, 1, 0);
    EXPECT_EQ(ito_integral(Z, W0, 1.0)[0], 0.0);

    auto G = constant_one(g);
    std::vector<double> x;
    for (std::size_t r = 0; r < 10000; ++r) {
        auto W = BrownianPath::sample(g, 1, 3, r);
        double v = ito_integral(G, W, 1.0)[0];
        EXPECT_NEAR(v, W.value(g.size() - 1), 1e-12);
        x.push_back(v);
    }
    auto s = moments(x);
    EXPECT_NEAR(s.var, 1.0, 3 * s.var_err);
    EXPECT_THROW(ito_integral(G, W0, 0.3), std::domain_error);
}

TEST(Ito, IntervalIndicator) {
    Grid g(1, 1.0, 64);
    double a = 0.25, b = 0.625;
    auto G = AdaptedProcess::deterministic(g, R1, 1, [=](double t) { return scalar_mat(t > a && t <= b ? 1.0 : 0.0); });
    std::vector<double> x;
    for (std::size_t r = 0; r < 10000; ++r) x.push_back(ito_integral(G, BrownianPath::sample(g, 1, 4, r), 1.0)[0]);
    auto s = moments(x);
    EXPECT_NEAR(s.var, b - a, 3 * s.var_err);
}

TEST(Ito, AdaptednessEnforced) {
    Grid g(1, 1.0, 32);
    auto peek = AdaptedProcess::path_functional(g, R1, 1, [](std::size_t i, const PastView& pv) {
        return scalar_mat(pv.dW(i));  // the current increment is not yet known
    });
    EXPECT_THROW(ito_integral(peek, BrownianPath::sample(g, 1, 1, 0), 1.0), adaptedness_error);

    // a legal functional: W at the left endpoint; int W dW has mean 0
    auto past = AdaptedProcess::path_functional(g, R1, 1, [](std::size_t, const PastView& pv) { return scalar_mat(pv.W()); });
    std::vector<double> ito, ant;
    for (std::size_t r = 0; r < 4000; ++r) {
        auto W = BrownianPath::sample(g, 1, 6, r);
        ito.push_back(ito_integral(past, W, 1.0)[0]);
        // planted violation: G(t_i) = W at the right endpoint of cell i
        std::vector<double> G(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) G[i] = W.value(i);
        ant.push_back(riemann_sum_unchecked(G, 1, 1, W)[0]);
    }
    auto si = moments(ito), sa = moments(ant);
    EXPECT_LT(std::abs(si.mean), 3 * std::sqrt(si.var / 4000));
    // the anticipative sum picks up sum dW_i^2 = T in the mean
    EXPECT_NEAR(sa.mean - si.mean, 1.0, 3 * std::sqrt(sa.var / 4000) + 0.05);
    EXPECT_GT(std::abs(sa.mean), 10 * std::sqrt(sa.var / 4000));
}

TEST(ApplySK, ZeroKernel) {
    Grid g(1, 1.0, 32);
    auto u = apply_SK(zero_kernel(), constant_one(g), BrownianPath::sample(g, 1, 1, 0));
    for (double v : u.values()) EXPECT_EQ(v, 0.0);
    McConfig cfg;
    cfg.paths = 64;
    auto e = mc_lp_norm(zero_kernel(), constant_one(g), 2, nullptr, cfg);
    EXPECT_EQ(e.value, 0.0);
    EXPECT_EQ(e.stderr_, 0.0);
}

TEST(ApplySK, IndicatorVariance) {
    // cells j < i with c_i - c_j < 1 contribute, so Var = min(i, 1/h - 1) h
    Grid g(1, 2.0, 64);
    double h = g.width();
    KernelTable T(indicator_kernel(), g);
    auto G = constant_one(g);
    std::vector<std::size_t> at{8, 31, 50};
    std::vector<std::vector<double>> x(at.size());
    for (std::size_t r = 0; r < 10000; ++r) {
        auto u = apply_SK(T, G, BrownianPath::sample(g, 1, 8, r));
        for (std::size_t k = 0; k < at.size(); ++k) x[k].push_back(u(at[k]));
    }
    for (std::size_t k = 0; k < at.size(); ++k) {
        double disc = std::min(double(at[k]), 1 / h - 1) * h;
        auto s = moments(x[k]);
        EXPECT_NEAR(s.var, disc, 3 * s.var_err);
        EXPECT_NEAR(disc, std::min(g.center(at[k]), 1.0), h);
    }
}

TEST(ApplySK, HeatModeVariance) {
    std::vector<double> eig{1, 4};
    Grid g(1, 1.0, 128);
    double h = g.width();
    KernelTable T(make_semigroup_kernel(eig), g);
    auto X = FiniteDimSpace::euclidean(2);
    auto G = AdaptedProcess::deterministic(g, X, 2, [](double) -> Mat { return Mat::Identity(2, 2); });
    std::size_t i = g.size() - 1;
    double s = g.center(i);
    std::vector<double> x0, x1;
    for (std::size_t r = 0; r < 10000; ++r) {
        auto u = apply_SK(T, G, BrownianPath::sample(g, 2, 10, r));
        x0.push_back(u(i, 0));
        x1.push_back(u(i, 1));
    }
    for (std::size_t k = 0; k < 2; ++k) {
        double l = eig[k];
        // midpoint sum over cells below s and the continuum (1 - e^{-2 l s}) / 2
        double disc = 0;
        for (std::size_t j = 0; j < i; ++j) disc += l * std::exp(-2 * l * (s - g.center(j))) * h;
        EXPECT_NEAR(disc, (std::exp(-l * h) - std::exp(-2 * l * s)) / 2, 1e-4);
        auto sm = moments(k == 0 ? x0 : x1);
        EXPECT_NEAR(sm.var, disc, 3 * sm.var_err);
    }
}

TEST(ApplySK, Linearity) {
    Grid g(1, 2.0, 64);
    auto X = FiniteDimSpace::euclidean(2);
    auto K = make_semigroup_kernel({1, 3});
    auto G1 = AdaptedProcess::deterministic(g, X, 1, [](double t) -> Mat { return Mat::Constant(2, 1, std::sin(t)); });
    auto G2 = AdaptedProcess::path_functional(g, X, 1, [](std::size_t, const PastView& pv) -> Mat {
        return Mat::Constant(2, 1, pv.W());
    });
    double a = 1.7, b = -0.4;
    auto G = AdaptedProcess::path_functional(g, X, 1, [&](std::size_t i, const PastView& pv) -> Mat {
        return a * Mat::Constant(2, 1, std::sin(g.center(i))) + b * Mat::Constant(2, 1, pv.W());
    });
    KernelTable T(K, g);
    for (std::size_t r = 0; r < 5; ++r) {
        auto W = BrownianPath::sample(g, 1, 12, r);
        auto u = apply_SK(T, G, W), u1 = apply_SK(T, G1, W), u2 = apply_SK(T, G2, W);
        for (std::size_t k = 0; k < u.values().size(); ++k)
            EXPECT_NEAR(u.values()[k], a * u1.values()[k] + b * u2.values()[k], 1e-12);
        auto s1 = apply_SK(T, G1.scaled(a), W);
        for (std::size_t k = 0; k < s1.values().size(); ++k) EXPECT_NEAR(s1.values()[k], a * u1.values()[k], 1e-12);
    }
}

TEST(McNorm, IsometryAtP2) {
    Grid g(1, 2.0, 64);
    McConfig cfg;
    cfg.paths = 10000;
    cfg.seed = 21;
    for (const auto& K : {exponential_kernel(1), indicator_kernel(), abs_power_kernel()}) {
        KernelTable T(K, g);
        auto G = AdaptedProcess::deterministic(g, R1, 1, [](double t) { return scalar_mat(1 + t); });
        auto m = mc_moment(T, G, 2, nullptr, cfg);
        double q = gamma_side_moment(T, G, 2, nullptr);
        EXPECT_NEAR(m.mean, q, 3 * m.stderr_) << K.name();
    }
}

TEST(McNorm, GaussianFourthMoment) {
    // deterministic G: S_K G(s) is centered Gaussian, so E|.|^4 = 3 (E|.|^2)^2 pointwise
    Grid g(1, 2.0, 64);
    McConfig cfg;
    cfg.paths = 10000;
    cfg.seed = 4;
    KernelTable T(exponential_kernel(1), g);
    auto G = constant_one(g);
    auto m = mc_moment(T, G, 4, nullptr, cfg);
    double q = gamma_side_moment(T, G, 4, nullptr);
    EXPECT_NEAR(m.mean, 3 * q, 3 * m.stderr_);
    // ratio stable as the path count grows
    cfg.paths = 2500;
    auto m2 = mc_moment(T, G, 4, nullptr, cfg);
    EXPECT_NEAR(m2.mean / q, m.mean / q, 3 * (m.stderr_ + m2.stderr_) / q);
}

TEST(McNorm, RejectsSmallPAndFewPaths) {
    Grid g(1, 1.0, 16);
    McConfig cfg;
    cfg.paths = 16;
    EXPECT_THROW(mc_lp_norm(exponential_kernel(1), constant_one(g), 1.5, nullptr, cfg), std::domain_error);
    cfg.paths = 1;
    EXPECT_THROW(mc_lp_norm(exponential_kernel(1), constant_one(g), 2, nullptr, cfg), std::domain_error);
}

TEST(McNorm, Determinism) {
    Grid g(1, 1.0, 32);
    McConfig cfg;
    cfg.paths = 200;
    cfg.seed = 99;
    auto a = mc_lp_norm(exponential_kernel(2), constant_one(g), 4, nullptr, cfg);
    auto b = mc_lp_norm(exponential_kernel(2), constant_one(g), 4, nullptr, cfg);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Doob, ZeroHeatAndSingleTruncation) {
    Grid g(1, 1.0, 64);
    McConfig cfg;
    cfg.paths = 2000;
    cfg.seed = 5;
    std::vector<double> lattice{1.0 / 32, 1.0 / 8, 1.0 / 4, 1.0 / 2};
    auto z = doob_maximal_check(zero_kernel(), constant_one(g), 2, cfg, lattice);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_EQ(z.rhs, 0.0);
    EXPECT_TRUE(z.pass);

    auto X = FiniteDimSpace::euclidean(3);
    auto G = AdaptedProcess::deterministic(g, X, 1, [](double) -> Mat { return Mat::Ones(3, 1); });
    auto h = doob_maximal_check(make_semigroup_kernel({1, 4, 16}), G, 2, cfg, lattice);
    EXPECT_DOUBLE_EQ(h.constant, 8.0);
    EXPECT_TRUE(h.pass);

    auto one = doob_maximal_check(exponential_kernel(1), constant_one(g), 2, cfg, {0.1});
    double full = one.rhs / one.constant, full_err = one.rhs_stderr / one.constant;
    EXPECT_LE(one.lhs, full + 3 * (one.lhs_stderr + full_err));
}

TEST(HIndependence, HeatAndZero) {
    Grid g(1, 1.0, 32);
    McConfig cfg;
    cfg.paths = 4000;
    cfg.seed = 2;
    GridFunction G1(g, FiniteDimSpace::euclidean(3));
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t k = 0; k < 3; ++k) G1(i, k) = 1.0 + 0.5 * k;
    auto r = h_independence_check(make_semigroup_kernel({1, 2, 4}), G1, 2, {1, 2, 4}, cfg);
    EXPECT_TRUE(r.pass);
    ASSERT_EQ(r.estimates.size(), 3u);
    auto z = h_independence_check(zero_kernel(3), G1, 2, {1, 2, 4}, cfg);
    for (const auto& e : z.estimates) EXPECT_EQ(e.value, 0.0);
    EXPECT_TRUE(z.pass);
}

TEST(Smr, HeatExperiment) {
    McConfig cfg;
    cfg.paths = 4000;
    cfg.seed = 1;
    Grid g(1, 4.0, 64);
    auto rep = smr_heat_experiment({1, 2, 4, 8, 16}, 2, nullptr, cfg, g);
    EXPECT_LE(rep.max_identity_error, 1e-9);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << " " << c.measured << " vs " << c.reference;
    auto w = Weight::power(g, 0.5);
    auto rw = smr_heat_experiment({1, 2, 4, 8, 16}, 4, &w, cfg, g);
    EXPECT_GT(rw.weight_characteristic, 1.0);
    for (double C : rw.empirical_constants) EXPECT_TRUE(std::isfinite(C));
    EXPECT_THROW(smr_heat_experiment({1}, 1.5, nullptr, cfg, g), std::domain_error);
}

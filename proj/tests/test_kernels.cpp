#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "scz/appendix.hpp"
#include "scz/kernel.hpp"
#include "scz/kernel_checks.hpp"
#include "scz/rng.hpp"
#include "scz/stochastic.hpp"

using namespace scz;

namespace {

constexpr double e_ = std::numbers::e;

SamplingDomain dom8() { return {8.0, 2 * 8.0 / 1024}; }

Kernel frac_quarter() {
    return make_fractional_kernel([](double r) { return std::min(1.0, std::pow(r, -0.75)); }, 0.25, 1.0);
}

// sup over d in (0,8), |rho| <= 1/2 of |k(d) - k(d(1+rho))| sqrt(d) / omega(|rho|) on a dense lattice
template <class F>
double lattice_dini_sup(F k, double eps, int nd = 400, int nr = 200) {
    double best = 0;
    for (int a = 0; a <= nd; ++a) {
        double d = 8 * std::pow(10.0, -4.0 + 4.0 * a / nd);
        for (int b = 1; b <= nr; ++b) {
            double rho = 0.5 * b / nr;
            for (double sg : {-1.0, 1.0}) {
                double d2 = d * (1 + sg * rho);
                if (d2 >= 8) continue;
                best = std::max(best, std::abs(k(d) - k(d2)) * std::sqrt(d) / std::pow(rho, eps));
            }
        }
    }
    return best;
}

// The wedge integrand over x in the plane by polar quadrature (trapezoid in angle), y = (rho, 0).
double wedge_polar_oracle(const WedgeParams& p, double t, double rho) {
    const double mu = p.mu(), a = p.a(), st = std::sqrt(t);
    auto zeta = [st](double r) { return r / (r + st); };
    const int M = 512;
    auto radial = [&](double r) {
        double s = 0;
        for (int k = 0; k < M; ++k) {
            double ph = 2 * std::numbers::pi * k / M;
            double dx = r * std::cos(ph) - rho, dy = r * std::sin(ph);
            s += std::exp(-p.sigma * (dx * dx + dy * dy) / t);
        }
        s *= 2 * std::numbers::pi / M;
        return std::pow(zeta(r), mu - p.j) * std::pow(zeta(rho), mu) / t * s * std::pow(r, a) *
               std::pow(rho, 2 - a) / (r * r) * r;
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double R = rho + 14 * std::sqrt(t / p.sigma), total = 0;
    for (double lo = 0, hi = 0.25; lo < R; lo = hi, hi *= 2) total += GK::integrate(radial, lo, std::min(hi, R), 10, 1e-12);
    return total;
}

}  // namespace

TEST(Zoo, Causality) {
    std::vector<Kernel> causal{indicator_kernel(2), exponential_kernel(3), make_semigroup_kernel({1, 4, 9}),
                               inverse_kernel(), frac_quarter()};
    RngStream rng(3, 0);
    for (const auto& K : causal) {
        ASSERT_TRUE(K.is_causal()) << K.name();
        for (int i = 0; i < 200; ++i) {
            double s = 4 * rng.uniform(), t = 4 * rng.uniform();
            if (s <= t) EXPECT_TRUE((K(s, t).array() == 0).all()) << K.name();
        }
        EXPECT_TRUE((K(2.0, 2.0).array() == 0).all());
        EXPECT_GT(K.norm(0.5, 0.25), 0.0) << K.name();
    }
}

TEST(Zoo, ConvolutionSpotCheck) {
    RngStream rng(4, 0);
    for (const auto& K : {indicator_kernel(), exponential_kernel(2), make_semigroup_kernel({1, 5}), abs_power_kernel()}) {
        ASSERT_TRUE(K.is_convolution());
        for (int i = 0; i < 100; ++i) {
            double s = 4 * rng.uniform(), t = 4 * rng.uniform(), h = rng.uniform();
            EXPECT_TRUE(((K(s, t) - K(s + h, t + h)).array().abs() < 1e-12 * (1 + K.norm(s, t))).all()) << K.name();
        }
    }
    EXPECT_FALSE(hilbert_hankel_kernel().is_convolution());
}

TEST(Zoo, SemigroupKernel) {
    EXPECT_THROW(make_semigroup_kernel({}), std::domain_error);
    EXPECT_THROW(make_semigroup_kernel({1, 0}), std::domain_error);
    // ||k_1||_{L^2(0,inf)}: midpoint sum on (0,40) plus the exact tail
    auto K = make_semigroup_kernel({1});
    Grid g(1, 40.0, 1 << 20);
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += std::pow(K(g.center(i), 0)(0, 0), 2) * g.width();
    s += std::exp(-80.0) / 2;
    EXPECT_NEAR(std::sqrt(s), 1 / std::sqrt(2.0), 1e-8);
    // per-mode square integral is 1/2
    for (double l : {0.5, 1.0, 4.0, 64.0}) EXPECT_NEAR(heat_mode_square_integral(l, Grid(1, 4.0, 256)), 0.5, 1e-9);
}

TEST(Dini, NormExamples) {
    EXPECT_NEAR(dini_norm(DiniModulus::power(1, 0.5)), 1.0, 1e-10);
    EXPECT_NEAR(dini_norm(DiniModulus::power(1, 1)), std::sqrt(0.5), 1e-10);
    for (double C : {0.5, 2.0})
        for (double eps : {0.1, 0.25, 0.7}) EXPECT_NEAR(dini_norm(DiniModulus::power(C, eps)), C / std::sqrt(2 * eps), 1e-9);
    // omega = 1 away from 0 is not Dini; the integral passes any small cap
    DiniModulus flat([](double r) { return r > 0 ? 1.0 : 0.0; });
    EXPECT_TRUE(std::isinf(dini_norm(flat, 10.0)));
}

TEST(Dini, ModulusValidation) {
    std::string why;
    EXPECT_TRUE(DiniModulus::power(2, 0.5).validate());
    EXPECT_FALSE(DiniModulus([](double r) { return r * r; }).validate(256, &why));
    EXPECT_FALSE(why.empty());
    EXPECT_FALSE(DiniModulus([](double r) { return 1 + r; }).validate());
}

TEST(Dini, ZeroKernelAndScaling) {
    auto m = DiniModulus::power(1, 1);
    EXPECT_EQ(check_dini2(zero_kernel(), m, 2000, 1, dom8()).constant, 0.0);
    auto K = exponential_kernel(1);
    auto a = check_dini2(K, m, 4000, 9, dom8());
    auto b = check_dini2(K.scaled(3.0), m, 4000, 9, dom8());
    EXPECT_NEAR(b.constant, 3 * a.constant, 1e-12 * b.constant);
}

TEST(Dini, WitnessesReproduceConstant) {
    auto m = DiniModulus::power(1, 1);
    auto rep = check_dini2(exponential_kernel(1), m, 4000, 2, dom8());
    ASSERT_FALSE(rep.witnesses.empty());
    EXPECT_EQ(dini_ratio(exponential_kernel(1), m, rep.witnesses.front()), rep.constant);
}

TEST(Dini, ExponentialFitAgainstLattice) {
    auto K = exponential_kernel(1);
    double oracle = lattice_dini_sup([](double u) { return std::exp(-u); }, 1.0);
    double c1 = fit_dini_constant(K, 1, 20000, 3, dom8());
    double c2 = fit_dini_constant(K, 1, 80000, 3, dom8());
    EXPECT_LE(c1, oracle * 1.001);
    EXPECT_LE(c2, oracle * 1.001);
    EXPECT_GT(c2, 0.97 * oracle);
    EXPECT_NEAR(c1, c2, 0.02 * c2);
    EXPECT_TRUE(check_dini2(K, DiniModulus::power(oracle * 1.001, 1), 20000, 5, dom8()).pass);
}

TEST(Dini, AbsPowerPassesButIsNotBounded) {
    // |d^{-1/2} - (d(1-rho))^{-1/2}| sqrt d / rho is scale free, sup at rho = 1/2
    double sup = 2 * (std::sqrt(2.0) - 1);
    double c = fit_dini_constant(abs_power_kernel(), 1, 20000, 3, dom8());
    EXPECT_LE(c, sup * (1 + 1e-9));
    EXPECT_GT(c, 0.98 * sup);
}

TEST(Dini, FractionalKernelFiniteConstant) {
    auto K = frac_quarter();
    double oracle = lattice_dini_sup([&](double u) { return K(u, 0)(0, 0); }, 0.25, 100, 40);
    EXPECT_TRUE(std::isfinite(oracle));
    double c = fit_dini_constant(K, 0.25, 2000, 3, dom8());
    EXPECT_LE(c, oracle * 1.05);
    EXPECT_TRUE(check_dini2(K, DiniModulus::power(oracle * 1.05, 0.25), 2000, 11, dom8()).pass);
}

TEST(Fractional, BetaIdentity) {
    auto K = make_fractional_kernel([](double r) { return std::pow(r, -0.75); }, 0.25, 1.0);
    // Gamma(1/4)^{-1} B(1/4,1/4) s^{-1/2} = Gamma(1/4) / sqrt(pi) / sqrt(s)
    for (double s : {0.1, 0.7, 3.0}) {
        double exact = std::tgamma(0.25) / std::sqrt(std::numbers::pi) / std::sqrt(s);
        EXPECT_NEAR(K(s, 0)(0, 0), exact, 1e-9 * exact);
    }
    EXPECT_NEAR(K(0.7, 0)(0, 0), 2.4448775839, 1e-9);
    auto Z = make_fractional_kernel([](double) { return 0.0; }, 0.25, 1.0);
    EXPECT_EQ(Z(1.3, 0.2)(0, 0), 0.0);
    EXPECT_THROW(make_fractional_kernel([](double) { return 0.0; }, 0.5, 1.0), std::domain_error);
    EXPECT_THROW(make_fractional_kernel([](double r) { return std::pow(r, -0.9); }, 0.25, 1.0), std::domain_error);
}

TEST(Standard, ExponentialConstants) {
    auto K = exponential_kernel(1);
    EXPECT_NEAR(size_constant(K, 20000, 1, dom8()), std::sqrt(1 / (2 * e_)), 1e-9);
    EXPECT_NEAR(standard_constant_from_derivatives(K, 1e-5, 20000, 1, dom8()), std::sqrt(27 / (8 * e_ * e_ * e_)), 1e-8);
    EXPECT_EQ(standard_constant_from_derivatives(zero_kernel(), 1e-5, 2000, 1, dom8()), 0.0);
    EXPECT_EQ(size_constant(zero_kernel(), 2000, 1, dom8()), 0.0);
}

TEST(Sector, ClosedFormsAndRay) {
    auto b0 = sector_family_bounds(0);
    EXPECT_NEAR(b0.C0 * b0.C0, 0.18394, 1e-5);
    EXPECT_NEAR(b0.C1 * b0.C1, 0.16803, 1e-5);
    EXPECT_NEAR(sector_family_bounds(std::numbers::pi / 3).C0 * sector_family_bounds(std::numbers::pi / 3).C0,
                1 / e_, 1e-12);
    for (double th : {0.0, std::numbers::pi / 6, std::numbers::pi / 4, std::numbers::pi / 3}) {
        auto b = sector_family_bounds(th);
        EXPECT_NEAR(b.sup_size, b.C0 * b.C0, 1e-6 * b.C0 * b.C0);
        EXPECT_LE(b.sup_derivative, b.C1 * b.C1 * (1 + 1e-6));
    }
    EXPECT_THROW(sector_family_bounds(std::numbers::pi / 2), std::domain_error);
}

TEST(Hormander, ZeroAndMonotone) {
    Grid g(1, 8.0, 1024);
    EXPECT_EQ(check_hormander2(zero_kernel(), g, 16, 4, 1).constant, 0.0);
    auto K = exponential_kernel(1);
    RngStream rng(8, 0);
    for (int i = 0; i < 50; ++i) {
        double c = 2 + 4 * rng.uniform(), r = 0.05 + rng.uniform();
        double s = c + r * (rng.uniform() - 0.5), s2 = c + r * (rng.uniform() - 0.5);
        EXPECT_LE(hormander_integral(K, g, c, 1.5 * r, s, s2), hormander_integral(K, g, c, r, s, s2) + 1e-15);
    }
}

TEST(Hormander, IndicatorAgainstExactMeasure) {
    // |1_(0,1)(s-t) - 1_(0,1)(s2-t)|^2 is the indicator of two intervals of length |s-s2|;
    // the quadrature keeps the cells whose centers are outside the ball.
    Grid g(1, 8.0, 2048);
    auto K = indicator_kernel();
    auto rep = check_hormander2(K, g, 64, 8, 5);
    ASSERT_FALSE(rep.witnesses.empty());
    auto outside = [](double a, double b, double c, double r) {
        double lo = std::max(a, c - r), hi = std::min(b, c + r);
        return (b - a) - std::max(0.0, hi - lo);
    };
    for (const auto& w : rep.witnesses) {
        double a = std::min(w.s, w.s2), b = std::max(w.s, w.s2);
        double exact = std::sqrt(outside(a - 1, b - 1, w.t, w.extra) + outside(a, b, w.t, w.extra));
        EXPECT_NEAR(w.ratio, exact, std::sqrt(4 * g.width()));
        EXPECT_EQ(hormander_integral(K, g, w.t, w.extra, w.s, w.s2), w.ratio);
    }
    EXPECT_LE(rep.constant, 1.0);
}

TEST(Hormander, FromDini) {
    Grid g(1, 8.0, 2048);
    auto m = DiniModulus::power(0.66, 1);
    auto z = hormander_from_dini_check(zero_kernel(), m, g);
    EXPECT_EQ(z.hormander, 0.0);
    EXPECT_EQ(z.ratio, 0.0);
    EXPECT_NEAR(z.dini, 0.66 / std::sqrt(2.0), 1e-10);

    auto K = exponential_kernel(1);
    auto a = hormander_from_dini_check(K, m, g, 32, 4, 7);
    auto b = hormander_from_dini_check(K, m, g, 128, 4, 7);
    EXPECT_TRUE(a.pass);
    EXPECT_TRUE(b.pass);
    EXPECT_LE(b.ratio, kHormanderDiniConstant1D);
    EXPECT_NEAR(a.ratio, b.ratio, 0.1 * b.ratio);

    auto heat = make_semigroup_kernel({1, 2, 4, 8, 16});
    double ch = fit_dini_constant(heat, 1, 8000, 3, dom8());
    auto h = hormander_from_dini_check(heat, DiniModulus::power(ch, 1), g, 64, 4, 7);
    EXPECT_TRUE(std::isfinite(h.ratio));
    EXPECT_TRUE(h.pass);
}

TEST(Wedge, DefaultsAgainstPolarOracle) {
    WedgeParams p;
    ASSERT_TRUE(p.admissible());
    auto r = wedge_schur_integral(p, 1.0, 0.7, WedgeVariable::x);
    EXPECT_TRUE(r.finite);
    EXPECT_NEAR(r.value, wedge_polar_oracle(p, 1.0, 0.7), 1e-8 * r.value);
    EXPECT_NEAR(r.value, 0.0861316376322, 1e-10);
    EXPECT_LT(r.tail_bound, 1e-10 * r.value);
}

TEST(Wedge, TimeInvarianceAndRadius) {
    WedgeParams p;
    for (auto v : {WedgeVariable::x, WedgeVariable::y}) {
        double base = wedge_schur_integral(p, 1.0, 0.7, v).value;
        for (double t : {0.25, 4.0, 16.0})
            EXPECT_NEAR(wedge_schur_integral(p, t, 0.7 * std::sqrt(t), v).value, base, 1e-4 * base);
        WedgeOptions o;
        o.radius_factor = 24;
        EXPECT_NEAR(wedge_schur_integral(p, 1.0, 0.7, v, o).value, base, 1e-10 * base);
    }
    EXPECT_THROW(wedge_schur_integral(p, 0.0, 0.7, WedgeVariable::x), std::domain_error);
}

TEST(Wedge, GrowthTowardLowerEdge) {
    WedgeParams p;  // mu = 2, j = 0: lower edge a = -2
    std::vector<double> v;
    for (double gap : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01}) {
        p.theta = -2 + gap;
        ASSERT_TRUE(p.admissible());
        v.push_back(wedge_schur_integral(p, 1.0, 0.7, WedgeVariable::x).value);
    }
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_GT(v[i], v[i - 1]);
    EXPECT_GT(v.back(), 10 * v.front());
    p.theta = -2.0;
    EXPECT_FALSE(wedge_schur_integral(p, 1.0, 0.7, WedgeVariable::x).finite);
}

TEST(Parabolic, ZeroAndGaussian) {
    ParabolicOptions o;
    o.level = 4;
    o.samples = 5000;
    o.integrated_pairs = 6;
    auto z = parabolic_standard_check([](double, double, double, double) { return 0.0; }, 0, 1.0, o);
    EXPECT_TRUE(z.pass);
    EXPECT_EQ(z.pointwise_constant, 0.0);
    auto g = parabolic_standard_check(gaussian_parabolic_kernel(), 0, 1.0, o);
    EXPECT_TRUE(g.pass);
    EXPECT_TRUE(std::isfinite(g.pointwise_constant));
    EXPECT_GT(g.pointwise_constant, 0.0);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "scz/kernel_checks.hpp"
#include "scz/rng.hpp"

namespace scz {

// ---- Gaussian Schur integrals on a wedge ----

struct WedgeParams {
    double kappa = std::numbers::pi / 2;  // opening angle
    double sigma = 1;
    double theta = 1, q = 1;
    int j = 0;

    double mu() const { return std::numbers::pi / kappa; }
    double a() const { return theta / q; }
    bool admissible() const { return j - mu() < a() && a() < 2 + mu(); }
    void validate() const {
        if (!(kappa > 0 && kappa < 2 * std::numbers::pi)) throw std::domain_error("kappa must lie in (0, 2pi)");
        if (!(sigma > 0)) throw std::domain_error("sigma must be positive");
        if (!(q > 0)) throw std::domain_error("q must be positive");
        if (j < 0 || j > 2) throw std::domain_error("j must be 0, 1 or 2");
    }
};

enum class WedgeVariable { x, y };

struct WedgeOptions {
    double radius_factor = 12;  // R = rho + radius_factor * sqrt(t/sigma)
    double rel_tol = 1e-10;
};

struct WedgeResult {
    double value = 0;       // quadrature over (r_min, R) plus the analytic inner piece
    double inner_part = 0;  // contribution of (0, r_min)
    double tail_bound = 0;  // upper bound for the discarded (R, inf) piece
    double R = 0;
    bool finite = true;
};

namespace detail {

// e^{-z} I_0(z).
inline double i0e(double z) {
    if (z <= 700) return boost::math::cyl_bessel_i(0, z) * std::exp(-z);
    double iz = 1 / z;
    return (1 + iz / 8 + 9 * iz * iz / 128 + 225 * iz * iz * iz / 3072) / std::sqrt(2 * std::numbers::pi * z);
}

}  // namespace detail

// Integral over the plane of
//   zeta^{mu-j}(t,x) zeta^mu(t,y) t^{-1} exp(-sigma|x-y|^2/t) |x|^{a} |y|^{2-a} dz/|z|^2
// with a = theta/q, z the integration variable (x or y), the other point at
// distance rho from the origin and zeta(t,x) = |x|/(|x|+sqrt t). The angular
// integral is a Bessel function, so only a radial quadrature remains.
inline WedgeResult wedge_schur_integral(const WedgeParams& p, double t, double rho, WedgeVariable over,
                                        WedgeOptions opt = {}) {
    p.validate();
    if (!(t > 0)) throw std::domain_error("wedge integral needs t > 0");
    if (!(rho > 0)) throw std::domain_error("wedge integral needs a nonzero fixed point");
    const double mu = p.mu(), a = p.a(), st = std::sqrt(t), sg = p.sigma;
    auto zeta = [st](double r) { return r / (r + st); };

    double alpha1, beta, P;
    if (over == WedgeVariable::x) {
        alpha1 = mu - p.j;
        beta = a - 1;
        P = 2 * std::numbers::pi / t * std::pow(zeta(rho), mu) * std::pow(rho, 2 - a);
    } else {
        alpha1 = mu;
        beta = 1 - a;
        P = 2 * std::numbers::pi / t * std::pow(zeta(rho), mu - p.j) * std::pow(rho, a);
    }
    const double e = alpha1 + beta + 1;  // integrand ~ r^{e-1} at the origin

    WedgeResult res;
    res.R = rho + opt.radius_factor * std::sqrt(t / sg);
    if (!(e > 0)) {
        res.value = std::numeric_limits<double>::infinity();
        res.finite = false;
        return res;
    }

    auto f = [&](double r) {
        double g = std::exp(-sg * (r - rho) * (r - rho) / t) * detail::i0e(2 * sg * r * rho / t);
        return P * std::pow(zeta(r), alpha1) * g * std::pow(r, beta);
    };

    const double rmin = 1e-8 * st;
    res.inner_part = P * std::pow(st, -alpha1) * std::exp(-sg * rho * rho / t) * std::pow(rmin, e) / e;

    std::vector<double> cuts{rmin, res.R};
    double w = 4 * std::sqrt(t / sg);
    for (double c : {rho - w, rho, rho + w, st})
        if (c > rmin && c < res.R) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());

    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double body = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = std::log(cuts[i]), hi = std::log(cuts[i + 1]);
        if (hi <= lo) continue;
        body += GK::integrate([&](double u) { double r = std::exp(u); return f(r) * r; }, lo, hi, 12, opt.rel_tol);
    }
    res.value = body + res.inner_part;

    // (R, inf): I0e <= 1, zeta^{alpha1} <= max(1, zeta(R)^{alpha1}),
    // r^beta <= R^beta exp(beta^+ (r-R)/R); the Gaussian remainder is an erfc.
    double A = sg / t, b = std::max(beta, 0.0) / res.R, u0 = res.R - rho;
    double pref = P * std::max(1.0, std::pow(zeta(res.R), alpha1)) * std::pow(res.R, beta);
    res.tail_bound = pref * std::exp(-b * u0 + b * b / (4 * A)) * 0.5 * std::sqrt(std::numbers::pi / A) *
                     std::erfc(std::sqrt(A) * (u0 - b / (2 * A)));
    return res;
}

// ---- parabolic kernels K(t,s,x,y), d = 1, space domain (0,1), time (0,T) ----

using ParabolicKernel = std::function<double(double t, double s, double x, double y)>;

// |(t,x)| = max(|t|^{1/2}, |x|)
inline double parabolic_norm(double t, double x) { return std::max(std::sqrt(std::abs(t)), std::abs(x)); }

inline ParabolicKernel gaussian_parabolic_kernel() {
    return [](double t, double s, double x, double y) {
        double tau = t - s;
        if (tau <= 0) return 0.0;
        return std::exp(-(x - y) * (x - y) / (4 * tau)) / tau;
    };
}

struct ParabolicOptions {
    double T = 1;
    int level = 5;               // sample lattice: space step 2^-level, time step 4^-level
    std::size_t samples = 50000;
    std::uint64_t seed = 1;
    std::size_t integrated_pairs = 24;
    double fd_rel = 1e-5;
};

struct ParabolicReport {
    double hypothesis_constant = 0;  // sup of the Gaussian-type derivative bounds
    double pointwise_constant = 0;   // sup |dK| D^{3} / rho over admissible pairs
    double integrated_constant = 0;  // sup of the integrated difference divided by A0
    double A0 = 0;                   // constant used in the integrated check
    std::vector<Witness> witnesses;  // (s, y, t, t2, extra = x2 - x) of the pointwise sup
    std::size_t rejected = 0;
    bool pass = true;
};

namespace detail {

struct ParabolicSample {
    double t, s, x, y, t2, x2;
};

}  // namespace detail

inline ParabolicReport parabolic_standard_check(const ParabolicKernel& K, double A0, double c,
                                                ParabolicOptions opt = {}) {
    if (opt.level < 1 || opt.level > 12) throw std::domain_error("lattice level must lie in [1, 12]");
    ParabolicReport rep;
    const double T = opt.T, hx = std::ldexp(1.0, -opt.level), ht = hx * hx;
    const auto nx = static_cast<std::uint64_t>(1.0 / hx), nt = static_cast<std::uint64_t>(T / ht);
    RngStream rng(opt.seed, 0xA3);
    auto lattice = [&](std::uint64_t n, double step) {
        return static_cast<double>(1 + rng.next_u32() % (n - 1)) * step;
    };
    auto ok = [](double v) { return std::isfinite(v); };

    // hypotheses: size, first x-derivative and t-derivative with exponential decay
    for (std::size_t k = 0; k < opt.samples; ++k) {
        double t = lattice(nt, ht), s = lattice(nt, ht), x = lattice(nx, hx), y = lattice(nx, hx);
        if (t <= s) continue;
        double tau = t - s, u = std::abs(x - y) / std::sqrt(tau), decay = std::exp(c * u);
        double dx = opt.fd_rel * std::sqrt(tau), dt = opt.fd_rel * tau;
        double k0 = K(t, s, x, y);
        double kx = (K(t, s, x + dx, y) - K(t, s, x - dx, y)) / (2 * dx);
        double kt = (K(t + dt, s, x, y) - K(t - dt, s, x, y)) / (2 * dt);
        if (!ok(k0) || !ok(kx) || !ok(kt)) {
            ++rep.rejected;
            continue;
        }
        double v = std::max({std::abs(k0) * tau, std::abs(kx) * std::pow(tau, 1.5), std::abs(kt) * tau * tau}) * decay;
        rep.hypothesis_constant = std::max(rep.hypothesis_constant, v);
    }

    // pointwise difference bound for admissible pairs
    std::vector<detail::ParabolicSample> best;
    for (std::size_t k = 0; k < opt.samples; ++k) {
        double t = lattice(nt, ht), s = lattice(nt, ht), x = lattice(nx, hx), y = lattice(nx, hx);
        if (t <= s) continue;
        double D = parabolic_norm(t - s, x - y);
        // half the pairs near the constraint boundary, half spread over all scales
        double target = k % 2 ? D / 2 * (1 - 0.5 * rng.uniform())
                              : hx * std::exp(std::log(std::max(D / (2 * hx), 1.0)) * rng.uniform());
        double ddx = std::round(target * rng.uniform() / hx) * hx * rng.sign();
        double ddt = std::round(target * target * rng.uniform() / ht) * ht * rng.sign();
        double t2 = t + ddt, x2 = x + ddx;
        double rho = parabolic_norm(ddt, ddx);
        if (rho == 0 || rho > D / 2 || t2 <= 0 || t2 >= T || x2 <= 0 || x2 >= 1) {
            ++rep.rejected;
            continue;
        }
        double a = K(t, s, x, y), b = K(t2, s, x2, y);
        if (!ok(a) || !ok(b)) {
            ++rep.rejected;
            continue;
        }
        double r = std::abs(a - b) * D * D * D / rho;
        if (r > rep.pointwise_constant || rep.witnesses.size() < 5)
            keep_witness(rep.witnesses, Witness{s, y, t, t2, x2 - x, r});
        rep.pointwise_constant = std::max(rep.pointwise_constant, r);
    }

    if (A0 > 0) {
        rep.A0 = A0;
        rep.pass = rep.pointwise_constant <= A0;
    } else {
        rep.A0 = rep.pointwise_constant;
    }
    rep.pass = rep.pass && std::isfinite(rep.pointwise_constant) && std::isfinite(rep.hypothesis_constant);

    // integrated bound: (int_0^T (int_{I(s)} |dK| dy)^2 ds)^{1/2}, with
    // I(s) = {y : rho <= |(t-s, x-y)|/2}
    if (rep.A0 > 0 && opt.integrated_pairs > 0) {
        // fixed Gauss-Legendre panels on geometric cuts at the scales rho and sqrt|t-s|
        using GL = boost::math::quadrature::gauss<double, 15>;
        RngStream r2(opt.seed, 0xA4);
        for (std::size_t k = 0; k < opt.integrated_pairs; ++k) {
            double t = T * (0.25 + 0.75 * r2.uniform()), x = 0.1 + 0.8 * r2.uniform();
            double rho = 0.2 * std::exp(std::log(1e-3) * r2.uniform());
            double ddx = rho * (r2.uniform() < 0.5 ? r2.sign() : r2.uniform() * r2.sign());
            double ddt = rho * rho * (std::abs(ddx) < rho ? r2.sign() : r2.uniform() * r2.sign());
            double t2 = t + ddt, x2 = x + ddx;
            if (t2 <= 0 || t2 >= T || x2 <= 0 || x2 >= 1) continue;
            rho = parabolic_norm(ddt, ddx);
            auto inner = [&](double s) {
                auto g = [&](double y) {
                    double v = std::abs(K(t, s, x, y) - K(t2, s, x2, y));
                    return std::isfinite(v) ? v : 0.0;
                };
                bool hole = std::sqrt(std::abs(t - s)) < 2 * rho;  // then only |x-y| >= 2 rho counts
                std::vector<double> cuts{0.0, 1.0};
                if (hole) cuts.insert(cuts.end(), {x - 2 * rho, x + 2 * rho});
                for (double cc : {x, x2}) cuts.push_back(cc);
                for (double tau : {std::abs(t - s), std::abs(t2 - s)})
                    for (double m = 0.125; m <= 64; m *= 2)
                        for (double cc : {x, x2}) cuts.insert(cuts.end(), {cc - m * std::sqrt(tau), cc + m * std::sqrt(tau)});
                std::erase_if(cuts, [](double c) { return c < 0 || c > 1; });
                std::sort(cuts.begin(), cuts.end());
                double sum = 0;
                for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                    double a = cuts[i], b = cuts[i + 1];
                    if (b <= a || (hole && a >= x - 2 * rho && b <= x + 2 * rho)) continue;
                    sum += GL::integrate(g, a, b);
                }
                return sum;
            };
            std::vector<double> sc{0.0, t, t2};
            for (double cc : {t, t2})
                for (double d = rho * rho / 64; cc - d > 0; d *= 2) sc.push_back(cc - d);
            std::erase_if(sc, [&](double c) { return c < 0 || c > std::max(t, t2); });
            std::sort(sc.begin(), sc.end());
            double J2 = 0;
            for (std::size_t i = 0; i + 1 < sc.size(); ++i)
                if (sc[i + 1] > sc[i])
                    J2 += GL::integrate([&](double s) { double v = inner(s); return v * v; }, sc[i], sc[i + 1]);
            rep.integrated_constant = std::max(rep.integrated_constant, std::sqrt(J2) / rep.A0);
        }
        rep.pass = rep.pass && std::isfinite(rep.integrated_constant);
    }
    return rep;
}

struct ParabolicRefinement {
    std::vector<int> levels;
    std::vector<double> constants;  // pointwise constants per level
    double max_step_ratio = 0;       // largest constants[i+1]/constants[i]
};

inline ParabolicRefinement parabolic_refinement(const ParabolicKernel& K, double c, std::vector<int> levels,
                                                ParabolicOptions opt = {}) {
    ParabolicRefinement out;
    out.levels = levels;
    opt.integrated_pairs = 0;
    for (int L : levels) {
        opt.level = L;
        out.constants.push_back(parabolic_standard_check(K, 0, c, opt).pointwise_constant);
    }
    for (std::size_t i = 1; i < out.constants.size(); ++i)
        if (out.constants[i - 1] > 0)
            out.max_step_ratio = std::max(out.max_step_ratio, out.constants[i] / out.constants[i - 1]);
    return out;
}

}  // namespace scz

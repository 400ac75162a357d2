#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "scz/grid.hpp"
#include "scz/kernel.hpp"
#include "scz/rng.hpp"

namespace scz {

// Modulus of continuity with its square-Dini integral.
class DiniModulus {
public:
    DiniModulus() = default;
    explicit DiniModulus(std::function<double(double)> omega, std::string label = "omega")
        : omega_(std::move(omega)), label_(std::move(label)) {}

    static DiniModulus power(double C, double eps) {
        if (!(eps > 0)) throw std::domain_error("dini_eps must be positive");
        return DiniModulus([C, eps](double r) { return C * std::pow(r, eps); },
                           "C*r^eps");
    }

    double operator()(double r) const { return omega_(r); }
    const std::string& label() const { return label_; }

    std::optional<double> cached() const { return cache_; }
    void cache(double v) const { cache_ = v; }

    // omega(0) = 0, nondecreasing and subadditive on a lattice of n points in [0,1].
    bool validate(std::size_t n = 256, std::string* why = nullptr) const {
        auto fail = [&](const char* m) {
            if (why) *why = m;
            return false;
        };
        if (omega_(0.0) != 0.0) return fail("omega(0) != 0");
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = omega_(static_cast<double>(i) / static_cast<double>(n - 1));
        for (std::size_t i = 1; i < n; ++i)
            if (v[i] < v[i - 1]) return fail("omega decreases on the lattice");
        for (std::size_t a = 1; a < n; ++a)
            for (std::size_t b = a; a + b < n; ++b)
                if (v[a + b] > (v[a] + v[b]) * (1 + 1e-12)) return fail("omega is not subadditive on the lattice");
        return true;
    }

private:
    std::function<double(double)> omega_;
    std::string label_;
    mutable std::optional<double> cache_;
};

// (int_0^1 omega(r)^2 dr/r)^{1/2}, integrated in u = -ln r on doubling panels.
// Values above `cap` are reported as +inf.
inline double dini_norm(const DiniModulus& m, double cap = 1e8) {
    if (auto c = m.cached()) return *c;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto f = [&](double u) {
        double w = m(std::exp(-u));
        return w * w;
    };
    double total = GK::integrate(f, 0.0, 1.0, 10, 1e-13);
    for (double a = 1.0; a < 1024.0; a *= 2) {
        total += GK::integrate(f, a, std::min(2 * a, 745.0), 10, 1e-13);
        if (!std::isfinite(total) || total > cap * cap) {
            m.cache(std::numeric_limits<double>::infinity());
            return std::numeric_limits<double>::infinity();
        }
        if (2 * a >= 745.0) break;
    }
    double v = std::sqrt(total);
    m.cache(v);
    return v;
}

enum class Condition { hormander2, dini2, standard };

inline const char* condition_name(Condition c) {
    switch (c) {
        case Condition::hormander2: return "hormander2";
        case Condition::dini2: return "dini2";
        case Condition::standard: return "standard";
    }
    return "?";
}

// (s, s2, t, t2): the pair that moved is (s,s2) or (t,t2); `extra` holds a ball
// radius for Hormander witnesses.
struct Witness {
    double s = 0, s2 = 0, t = 0, t2 = 0, extra = 0, ratio = 0;
};

struct KernelReport {
    Condition condition = Condition::dini2;
    double constant = 0;
    std::vector<Witness> witnesses;
    double T = 1;
    std::size_t cells = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double collar = 0;
    bool pass = true;
};

inline void keep_witness(std::vector<Witness>& ws, const Witness& w, std::size_t keep = 5) {
    ws.push_back(w);
    std::sort(ws.begin(), ws.end(), [](const Witness& a, const Witness& b) { return a.ratio > b.ratio; });
    if (ws.size() > keep) ws.resize(keep);
}

struct SamplingDomain {
    double T = 8.0;
    double collar = 0.0;  // minimal |s - t|; default 2 cell widths of the caller's grid
};

// ||K(s,t)-K(s2,t)|| |s-t|^{1/2} / omega(|s-s2|/|s-t|), and the t-variable analogue.
inline double dini_ratio(const Kernel& K, const DiniModulus& m, const Witness& w) {
    bool moved_s = w.s2 != w.s;
    double d = std::abs(w.s - w.t);
    Mat diff = moved_s ? Mat(K(w.s, w.t) - K(w.s2, w.t)) : Mat(K(w.s, w.t) - K(w.s, w.t2));
    double nd = operator_norm(diff, K.source(), K.target());
    double r = (moved_s ? std::abs(w.s - w.s2) : std::abs(w.t - w.t2)) / d;
    double om = m(r);
    if (nd == 0) return 0;
    if (om == 0) return std::numeric_limits<double>::infinity();
    return nd * std::sqrt(d) / om;
}

inline KernelReport check_dini2(const Kernel& K, const DiniModulus& m, std::size_t samples, std::uint64_t seed,
                                SamplingDomain dom = {}, double tol = 1e-9) {
    KernelReport rep;
    rep.condition = Condition::dini2;
    rep.T = dom.T;
    rep.samples = samples;
    rep.seed = seed;
    rep.collar = dom.collar;
    RngStream rng(seed, 0xD1);
    const double T = dom.T;
    std::size_t done = 0;
    while (done < samples) {
        double s = T * rng.uniform(), t = T * rng.uniform();
        double d = std::abs(s - t);
        if (d <= std::max(dom.collar, 1e-12 * T)) continue;
        // relative displacement log-uniform in [1e-4, 1/2]
        double rel = 0.5 * std::exp(std::log(2e-4) * rng.uniform());
        double delta = rel * d * rng.sign();
        Witness w{s, s, t, t, 0, 0};
        if (done % 2 == 0) {
            w.s2 = s + delta;
            if (w.s2 <= 0 || w.s2 >= T) continue;
        } else {
            w.t2 = t + delta;
            if (w.t2 <= 0 || w.t2 >= T) continue;
        }
        ++done;
        w.ratio = dini_ratio(K, m, w);
        if (w.ratio > rep.constant || rep.witnesses.size() < 5) keep_witness(rep.witnesses, w);
        rep.constant = std::max(rep.constant, w.ratio);
    }
    rep.pass = rep.constant <= 1 + tol;
    return rep;
}

// Best C with omega(r) = C r^eps.
inline double fit_dini_constant(const Kernel& K, double dini_eps, std::size_t samples, std::uint64_t seed,
                                SamplingDomain dom = {}) {
    return check_dini2(K, DiniModulus::power(1.0, dini_eps), samples, seed, dom).constant;
}

// Both Hormander integrals for one ball B(c,r) and s,s2 in B(c,r/2): t-cells
// of g with centers outside B.
inline double hormander_integral(const Kernel& K, const Grid& g, double c, double r, double s, double s2) {
    double h = g.width(), a = 0, b = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        double t = g.center(j);
        if (std::abs(t - c) < r) continue;
        double n1 = operator_norm(K(s, t) - K(s2, t), K.source(), K.target());
        double n2 = operator_norm(K(t, s) - K(t, s2), K.source(), K.target());
        a += n1 * n1;
        b += n2 * n2;
    }
    return std::sqrt(std::max(a, b) * h);
}

inline KernelReport check_hormander2(const Kernel& K, const Grid& quad, std::size_t balls, std::size_t pairs,
                                     std::uint64_t seed, double min_radius = 0) {
    KernelReport rep;
    rep.condition = Condition::hormander2;
    rep.T = quad.T();
    rep.cells = quad.size();
    rep.samples = balls * pairs;
    rep.seed = seed;
    const double T = quad.T();
    double rmin = std::max(min_radius, 4 * quad.width()), rmax = T / 2;
    RngStream rng(seed, 0x40);
    for (std::size_t b = 0; b < balls; ++b) {
        double r = rmin * std::exp(std::log(rmax / rmin) * rng.uniform());
        double c = r + (T - 2 * r) * rng.uniform();
        for (std::size_t k = 0; k < pairs; ++k) {
            double s = c + r * (rng.uniform() - 0.5), s2 = c + r * (rng.uniform() - 0.5);
            Witness w{s, s2, c, c, r, hormander_integral(K, quad, c, r, s, s2)};
            if (w.ratio > rep.constant || rep.witnesses.size() < 5) keep_witness(rep.witnesses, w);
            rep.constant = std::max(rep.constant, w.ratio);
        }
    }
    return rep;
}

namespace detail {

// Maximize f on [a,b] by Brent's method.
template <class F>
double maximize(F f, double a, double b) {
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, a, b, 52);
    return -r.second;
}

}  // namespace detail

// sup ||K(s,t)|| |s-t|^{1/2} over samples, refined by a 1-D maximization in s.
inline double size_constant(const Kernel& K, std::size_t samples, std::uint64_t seed, SamplingDomain dom = {}) {
    RngStream rng(seed, 0x51);
    double best = 0, bs = 0, bt = 0;
    for (std::size_t k = 0; k < samples; ++k) {
        double s = dom.T * rng.uniform(), t = dom.T * rng.uniform();
        double d = std::abs(s - t);
        if (d <= dom.collar) continue;
        double v = K.norm(s, t) * std::sqrt(d);
        if (v > best) best = v, bs = s, bt = t;
    }
    if (best > 0) {
        double lo = bs > bt ? bt + std::max(dom.collar, 1e-9) : 0.0, hi = bs > bt ? dom.T : bt - std::max(dom.collar, 1e-9);
        best = std::max(best, detail::maximize([&](double s) { return K.norm(s, bt) * std::sqrt(std::abs(s - bt)); },
                                               lo, hi));
    }
    return best;
}

// sup over samples of ||d_s K|| |s-t|^{3/2} and ||d_t K|| |s-t|^{3/2}, central
// differences with absolute step fd_step; samples with fd_step > |s-t|/2 are rejected.
inline double standard_constant_from_derivatives(const Kernel& K, double fd_step, std::size_t samples,
                                                 std::uint64_t seed, SamplingDomain dom = {}) {
    RngStream rng(seed, 0x52);
    auto ds = [&](double s, double t) {
        return operator_norm((K(s + fd_step, t) - K(s - fd_step, t)) / (2 * fd_step), K.source(), K.target());
    };
    auto dt = [&](double s, double t) {
        return operator_norm((K(s, t + fd_step) - K(s, t - fd_step)) / (2 * fd_step), K.source(), K.target());
    };
    double best = 0, bs = 0, bt = 0;
    bool in_s = true;
    for (std::size_t k = 0; k < samples; ++k) {
        double s = dom.T * rng.uniform(), t = dom.T * rng.uniform();
        double d = std::abs(s - t);
        if (d <= dom.collar || fd_step > d / 2) continue;
        double w = std::pow(d, 1.5);
        double a = ds(s, t) * w, b = dt(s, t) * w;
        if (a > best) best = a, bs = s, bt = t, in_s = true;
        if (b > best) best = b, bs = s, bt = t, in_s = false;
    }
    if (best > 0) {
        double gap = std::max(dom.collar, 2 * fd_step) + 1e-12;
        double lo = bs > bt ? bt + gap : 0.0, hi = bs > bt ? dom.T : bt - gap;
        if (hi > lo)
            best = std::max(best, detail::maximize(
                                      [&](double s) {
                                          return (in_s ? ds(s, bt) : dt(s, bt)) * std::pow(std::abs(s - bt), 1.5);
                                      },
                                      lo, hi));
    }
    return best;
}

struct HormanderFromDini {
    double hormander = 0;
    double dini = 0;
    double ratio = 0;
    bool pass = true;
};

// In one dimension, comparing both points with the ball center gives
// Hormander <= 2 sqrt(2) * Dini norm.
inline constexpr double kHormanderDiniConstant1D = 2.8284271247461903;

inline HormanderFromDini hormander_from_dini_check(const Kernel& K, const DiniModulus& m, const Grid& quad,
                                                   std::size_t balls = 64, std::size_t pairs = 4,
                                                   std::uint64_t seed = 7) {
    HormanderFromDini r;
    r.hormander = check_hormander2(K, quad, balls, pairs, seed).constant;
    r.dini = dini_norm(m);
    r.ratio = r.dini > 0 ? r.hormander / r.dini : 0.0;
    r.pass = r.ratio <= kHormanderDiniConstant1D;
    return r;
}

// ---- fractional kernels ----

// k(s) = Gamma(eps)^{-1} int_0^s (s-r)^{eps-1} Phi(r) dr. The integral is split at
// s/2; r = (s/2) x^{1/(1/2-eps)} absorbs r^{-1/2-eps} and s - r = (s/2) y^{1/eps}
// absorbs (s-r)^{eps-1}.
inline Kernel make_fractional_kernel(std::function<Mat(double)> phi, double dini_eps, double A0,
                                     FiniteDimSpace X, FiniteDimSpace Y) {
    if (!(dini_eps > 0 && dini_eps < 0.5)) throw std::domain_error("dini_eps must lie in (0, 1/2)");
    for (int i = 0; i < 256; ++i) {
        double r = std::pow(10.0, -6.0 + 12.0 * i / 255.0);
        double n = operator_norm(phi(r), X, Y);
        if (n > A0 * std::pow(r, -0.5 - dini_eps) * (1 + 1e-12))
            throw std::domain_error("Phi violates ||Phi(r)|| <= A0 r^{-1/2-eps} on the sample lattice");
    }
    const double eps = dini_eps;
    const double beta = 1.0 / (0.5 - eps);
    const double ig = 1.0 / std::tgamma(eps);
    auto k = [phi, eps, beta, ig, X, Y](double s) -> Mat {
        Mat out = Mat::Zero(Y.dim(), X.dim());
        if (!(s > 0)) return out;
        using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
        double a = s / 2;
        for (std::size_t rr = 0; rr < Y.dim(); ++rr)
            for (std::size_t cc = 0; cc < X.dim(); ++cc) {
                auto fa = [&](double x) {
                    if (x <= 0) return 0.0;
                    double r = a * std::pow(x, beta);
                    return std::pow(s - r, eps - 1) * phi(r)(rr, cc) * a * beta * std::pow(x, beta - 1);
                };
                auto fb = [&](double y) { return phi(s - a * std::pow(y, 1.0 / eps))(rr, cc); };
                double A = GK::integrate(fa, 0.0, 1.0, 15, 1e-12);
                double B = std::pow(a, eps) / eps * GK::integrate(fb, 0.0, 1.0, 15, 1e-12);
                out(rr, cc) = ig * (A + B);
            }
        return out;
    };
    auto K = convolution_kernel("fractional", X, Y, k, true);
    K.singular_diagonal();
    if (X.dim() == 1 && Y.dim() == 1) K.diagonal_values();
    return K;
}

inline Kernel make_fractional_kernel(std::function<double(double)> phi, double dini_eps, double A0) {
    auto R = FiniteDimSpace::euclidean(1);
    return make_fractional_kernel([phi](double r) { return scalar_mat(phi(r)); }, dini_eps, A0, R, R);
}

// ---- sector family ----

struct SectorBounds {
    double C0 = 0, C1 = 0;
    double sup_size = 0;        // numerically maximized sup_s |s k_lambda(s)^2| on the ray
    double sup_derivative = 0;  // numerically maximized sup_s |s^3 k_lambda'(s)^2|
};

// k_lambda(s) = lambda^{1/2} e^{-lambda s} with arg lambda = theta. The suprema do
// not depend on |lambda|; they are maximized for |lambda| in {1/4, 1, 5} and the
// largest value is reported.
inline SectorBounds sector_family_bounds(double theta) {
    if (!(theta >= 0 && theta < std::numbers::pi / 2)) throw std::domain_error("theta must lie in [0, pi/2)");
    SectorBounds b;
    double c = std::cos(theta);
    b.C0 = std::sqrt(1.0 / (2 * std::numbers::e * c));
    b.C1 = std::sqrt(27.0 / (8 * std::pow(std::numbers::e, 3) * c * c * c));
    for (double mod : {0.25, 1.0, 5.0}) {
        std::complex<double> lam = std::polar(mod, theta);
        auto k = [lam](double s) { return std::sqrt(lam) * std::exp(-lam * s); };
        auto dk = [lam](double s) { return -lam * std::sqrt(lam) * std::exp(-lam * s); };
        double hi = 60.0 / (mod * c);
        b.sup_size = std::max(b.sup_size, detail::maximize([&](double s) { return std::abs(s * k(s) * k(s)); }, 0.0, hi));
        b.sup_derivative = std::max(
            b.sup_derivative, detail::maximize([&](double s) { return std::abs(s * s * s * dk(s) * dk(s)); }, 0.0, hi));
    }
    return b;
}

}  // namespace scz

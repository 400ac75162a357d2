#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "scz/dyadic.hpp"
#include "scz/grid.hpp"

namespace scz {

inline double conjugate_exponent(double p) {
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return p / (p - 1.0);
}

// L^p norm of cell norms against w * cell_measure.
inline double lp_norm_of(const Grid& g, std::span<const double> cell_norms, double p,
                         const Weight* w = nullptr) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::domain_error("lp_norm needs finite p >= 1");
    if (w) require_same(g, w->grid());
    double m = 0;
    for (double x : cell_norms) m = std::max(m, x);
    if (m == 0) return 0;
    double s = 0;
    for (std::size_t i = 0; i < cell_norms.size(); ++i)
        s += std::pow(cell_norms[i] / m, p) * (w ? (*w)[i] : 1.0);
    return m * std::pow(s * g.cell_measure(), 1.0 / p);
}

inline double lp_norm(const GridFunction& f, double p, const Weight* w = nullptr) {
    auto n = f.norms();
    return lp_norm_of(f.grid(), n, p, w);
}

inline double lp_norm(const GridFunction& f, double p, const Weight& w) { return lp_norm(f, p, &w); }

// sup_t t * |{ |f| > t }|^{1/p}. For a step function the sup is approached as t
// increases to a cell value v, where the level set becomes { |f| >= v }.
inline double weak_lp_norm_of(const Grid& g, std::span<const double> cell_norms, double p) {
    if (!(p > 1.0)) throw std::domain_error("weak_lp_norm needs p > 1");
    std::vector<double> v(cell_norms.begin(), cell_norms.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    double best = 0;
    std::size_t i = 0;
    while (i < v.size() && v[i] > 0) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        double mu = static_cast<double>(j) * g.cell_measure();
        best = std::max(best, v[i] * std::pow(mu, 1.0 / p));
        i = j;
    }
    return best;
}

inline double weak_lp_norm(const GridFunction& f, double p) {
    auto n = f.norms();
    return weak_lp_norm_of(f.grid(), n, p);
}

// Dyadic A_p characteristic; p = 1 uses (essinf_Q w)^{-1}.
inline double ap_characteristic(const Weight& w, double p) {
    if (!(p >= 1.0)) throw std::domain_error("A_p characteristic needs p >= 1");
    const Grid& g = w.grid();
    auto Sw = pyramid_sums(g, w.values());
    std::vector<std::vector<double>> Ss;
    if (p == 1.0) {
        Ss = pyramid_reduce(g, w.values(), [](double a, double b) { return std::min(a, b); });
    } else {
        double e = 1.0 - conjugate_exponent(p);
        Ss = pyramid_sums(g, w.pow(e).values());
    }
    double best = 0;
    for (int k = 0; k <= g.levels(); ++k) {
        double n = static_cast<double>(cells_in_cube(g, k));
        for (std::size_t i = 0; i < Sw[k].size(); ++i) {
            double aw = Sw[k][i] / n;
            double val = p == 1.0 ? aw / Ss[k][i] : aw * std::pow(Ss[k][i] / n, p - 1.0);
            best = std::max(best, val);
        }
    }
    return best;
}

// Fujii-Wilson characteristic with the dyadic maximal operator.
inline double ainf_characteristic(const Weight& w) {
    const Grid& g = w.grid();
    auto S = pyramid_sums(g, w.values());
    int L = g.levels();
    // integral over P of max(m, dyadic maximal function of w restricted to P), in cell units
    std::function<double(Cube, double)> acc = [&](Cube P, double m) -> double {
        double avg = S[P.level][P.index] / static_cast<double>(cells_in_cube(g, P.level));
        double mm = std::max(m, avg);
        if (P.level == L) return mm;
        double s = 0;
        for (const Cube& c : children(P, g.dim())) s += acc(c, mm);
        return s;
    };
    double best = 0;
    for (int k = 0; k <= L; ++k)
        for (std::size_t i = 0; i < S[k].size(); ++i) best = std::max(best, acc({k, i}, 0.0) / S[k][i]);
    return best;
}

// sup over dyadic Q of the mean oscillation about the mean.
inline double bmo_seminorm(const GridFunction& f) {
    const Grid& g = f.grid();
    std::size_t d = f.dim();
    std::vector<std::vector<std::vector<double>>> comp(d);
    std::vector<double> col(g.size());
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) col[i] = f(i, k);
        comp[k] = pyramid_sums(g, col);
    }
    std::vector<double> mean(d), diff(d);
    double best = 0;
    for (int k = 0; k <= g.levels(); ++k) {
        double n = static_cast<double>(cells_in_cube(g, k));
        for (std::size_t q = 0; q < cube_count(g, k); ++q) {
            for (std::size_t c = 0; c < d; ++c) mean[c] = comp[c][k][q] / n;
            double s = 0;
            for (std::size_t cell : cube_cells(g, {k, q})) {
                for (std::size_t c = 0; c < d; ++c) diff[c] = f(cell, c) - mean[c];
                s += f.space().norm_unchecked(diff.data());
            }
            best = std::max(best, s / n);
        }
    }
    return best;
}

}  // namespace scz

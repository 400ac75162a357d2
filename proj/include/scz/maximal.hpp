#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "scz/dyadic.hpp"
#include "scz/grid.hpp"

namespace scz {

// Cube family used by the maximal operators.
//  dyadic:  all dyadic cubes of the grid.
//  shifted: dyadic cubes plus the same-scale grids shifted by 1/3 and 2/3 of the
//           side (rounded to cells, clipped at the boundary); 9 shift pairs in 2-D.
enum class CubeFamily { dyadic, shifted };

// Half-open box of cell indices [x0,x1) x [y0,y1); y-range is [0,1) in 1-D.
struct CellBox {
    std::size_t x0, x1, y0, y1;
    std::size_t count() const { return (x1 - x0) * (y1 - y0); }
};

namespace detail {

inline std::vector<std::size_t> shifts_for(std::size_t side, CubeFamily fam) {
    std::vector<std::size_t> out{0};
    if (fam == CubeFamily::shifted && side >= 3) {
        std::size_t a = (side + 1) / 3, b = (2 * side + 1) / 3;
        if (a > 0 && a < side) out.push_back(a);
        if (b > a && b < side) out.push_back(b);
    }
    return out;
}

// Intervals [start, start+side) covering [0,n), shifted by `shift`, clipped.
inline std::vector<std::pair<std::size_t, std::size_t>> shifted_intervals(std::size_t n, std::size_t side,
                                                                          std::size_t shift) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (shift > 0) out.push_back({0, std::min(shift, n)});
    for (std::size_t a = shift; a < n; a += side) out.push_back({a, std::min(a + side, n)});
    return out;
}

}  // namespace detail

// Calls fn(box) for every box of the family.
template <class Fn>
void for_each_family_box(const Grid& g, CubeFamily fam, Fn&& fn) {
    const std::size_t n = g.cells();
    for (int k = 0; k <= g.levels(); ++k) {
        std::size_t side = side_cells(g, k);
        auto sh = detail::shifts_for(side, fam);
        if (g.dim() == 1) {
            for (std::size_t a : sh)
                for (auto [x0, x1] : detail::shifted_intervals(n, side, a)) fn(CellBox{x0, x1, 0, 1});
        } else {
            for (std::size_t a : sh)
                for (std::size_t b : sh)
                    for (auto [x0, x1] : detail::shifted_intervals(n, side, a))
                        for (auto [y0, y1] : detail::shifted_intervals(n, side, b)) fn(CellBox{x0, x1, y0, y1});
        }
    }
}

template <class Fn>
void for_each_cell(const Grid& g, const CellBox& B, Fn&& fn) {
    for (std::size_t y = B.y0; y < B.y1; ++y)
        for (std::size_t x = B.x0; x < B.x1; ++x) fn(y * g.cells() + x);
}

// Summed-area table of a per-cell array; box sums in O(1).
class BoxSums {
public:
    BoxSums(const Grid& g, std::span<const double> v) : n_(g.cells()), twod_(g.dim() == 2) {
        std::size_t ny = twod_ ? n_ : 1;
        P_.assign((n_ + 1) * (ny + 1), 0.0);
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < n_; ++x)
                at(x + 1, y + 1) = v[y * n_ + x] + at(x, y + 1) + at(x + 1, y) - at(x, y);
    }
    double sum(const CellBox& B) const { return at(B.x1, B.y1) - at(B.x0, B.y1) - at(B.x1, B.y0) + at(B.x0, B.y0); }

private:
    double& at(std::size_t x, std::size_t y) { return P_[y * (n_ + 1) + x]; }
    double at(std::size_t x, std::size_t y) const { return P_[y * (n_ + 1) + x]; }
    std::size_t n_;
    bool twod_;
    std::vector<double> P_;
};

// Maximal function of a nonnegative per-cell array over the family (averages).
// Dyadic family: exact ancestor walk on pairwise pyramid sums.
inline std::vector<double> maximal_of(const Grid& g, std::span<const double> v, CubeFamily fam) {
    std::vector<double> out(g.size(), 0.0);
    auto S = pyramid_sums(g, v);
    for (int k = 0; k <= g.levels(); ++k) {
        double n = static_cast<double>(cells_in_cube(g, k));
        for (std::size_t c = 0; c < g.size(); ++c)
            out[c] = std::max(out[c], S[k][cube_of_cell(g, k, c).index] / n);
    }
    if (fam == CubeFamily::dyadic) return out;
    BoxSums P(g, v);
    for_each_family_box(g, fam, [&](const CellBox& B) {
        double avg = std::max(0.0, P.sum(B)) / static_cast<double>(B.count());
        for_each_cell(g, B, [&](std::size_t c) { out[c] = std::max(out[c], avg); });
    });
    return out;
}

// M_r f = M(|f|^r)^{1/r}.
inline GridFunction hl_maximal(const GridFunction& f, double r, CubeFamily fam = CubeFamily::shifted) {
    if (!(r > 0)) throw std::domain_error("maximal exponent r must be positive");
    const Grid& g = f.grid();
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::pow(f.cell_norm(i), r);
    auto m = maximal_of(g, v, fam);
    for (double& x : m) x = std::pow(x, 1.0 / r);
    return GridFunction::scalar(g, std::move(m));
}

// sup over family cubes Q containing the cell of the mean of ||f - <f>_Q||.
inline GridFunction sharp_maximal(const GridFunction& f, CubeFamily fam = CubeFamily::dyadic) {
    const Grid& g = f.grid();
    const std::size_t d = f.dim();
    std::vector<double> out(g.size(), 0.0), mean(d), diff(d);
    auto visit = [&](const CellBox& B, const std::vector<double>& m) {
        double s = 0;
        for_each_cell(g, B, [&](std::size_t c) {
            for (std::size_t k = 0; k < d; ++k) diff[k] = f(c, k) - m[k];
            s += f.space().norm_unchecked(diff.data());
        });
        double osc = s / static_cast<double>(B.count());
        for_each_cell(g, B, [&](std::size_t c) { out[c] = std::max(out[c], osc); });
    };
    std::vector<std::vector<std::vector<double>>> comp(d);
    std::vector<double> col(g.size());
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) col[i] = f(i, k);
        comp[k] = pyramid_sums(g, col);
    }
    for (int k = 0; k <= g.levels(); ++k) {
        std::size_t side = side_cells(g, k), per = cubes_per_axis(k);
        double cnt = static_cast<double>(cells_in_cube(g, k));
        for (std::size_t q = 0; q < cube_count(g, k); ++q) {
            for (std::size_t c = 0; c < d; ++c) mean[c] = comp[c][k][q] / cnt;
            CellBox B = g.dim() == 1 ? CellBox{q * side, (q + 1) * side, 0, 1}
                                     : CellBox{(q % per) * side, (q % per + 1) * side, (q / per) * side,
                                               (q / per + 1) * side};
            visit(B, mean);
        }
    }
    if (fam == CubeFamily::shifted) {
        std::vector<BoxSums> P;
        for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t i = 0; i < g.size(); ++i) col[i] = f(i, k);
            P.emplace_back(g, col);
        }
        for_each_family_box(g, fam, [&](const CellBox& B) {
            for (std::size_t c = 0; c < d; ++c) mean[c] = P[c].sum(B) / static_cast<double>(B.count());
            visit(B, mean);
        });
    }
    return GridFunction::scalar(g, std::move(out));
}

// Exhaustive sup over all cell-aligned intervals containing cell i (1-D), for tests.
inline double brute_force_maximal_1d(const GridFunction& f, std::size_t i) {
    const Grid& g = f.grid();
    if (g.dim() != 1) throw structural_error("brute-force maximal function is 1-D only");
    std::vector<double> pre(g.size() + 1, 0.0);
    for (std::size_t c = 0; c < g.size(); ++c) pre[c + 1] = pre[c] + f.cell_norm(c);
    double best = 0;
    for (std::size_t a = 0; a <= i; ++a)
        for (std::size_t b = i + 1; b <= g.size(); ++b)
            best = std::max(best, (pre[b] - pre[a]) / static_cast<double>(b - a));
    return best;
}

}  // namespace scz

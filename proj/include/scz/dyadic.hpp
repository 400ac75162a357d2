#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scz/grid.hpp"

namespace scz {

// Dyadic cube: level 0 is the whole domain, level grid.levels() is a single cell.
// In 2-D, index = iy * 2^level + ix.
struct Cube {
    int level = 0;
    std::size_t index = 0;
    friend bool operator==(const Cube&, const Cube&) = default;
    friend bool operator<(const Cube& a, const Cube& b) {
        return a.level != b.level ? a.level < b.level : a.index < b.index;
    }
};

inline std::size_t cubes_per_axis(int level) { return std::size_t{1} << level; }

inline std::size_t cube_count(const Grid& g, int level) {
    std::size_t n = cubes_per_axis(level);
    return g.dim() == 1 ? n : n * n;
}

inline std::size_t side_cells(const Grid& g, int level) { return g.cells() >> level; }

inline double cube_measure(const Grid& g, const Cube& Q) {
    double side = g.T() / static_cast<double>(cubes_per_axis(Q.level));
    return g.dim() == 1 ? side : side * side;
}

inline std::size_t cells_in_cube(const Grid& g, int level) {
    std::size_t s = side_cells(g, level);
    return g.dim() == 1 ? s : s * s;
}

inline Cube cube_of_cell(const Grid& g, int level, std::size_t cell) {
    std::size_t s = side_cells(g, level);
    if (g.dim() == 1) return {level, cell / s};
    std::size_t ix = (cell % g.cells()) / s, iy = (cell / g.cells()) / s;
    return {level, iy * cubes_per_axis(level) + ix};
}

inline bool cube_contains(const Grid& g, const Cube& Q, std::size_t cell) {
    return cube_of_cell(g, Q.level, cell) == Q;
}

inline Cube parent(const Cube& Q, int dim) {
    if (dim == 1) return {Q.level - 1, Q.index / 2};
    std::size_t n = cubes_per_axis(Q.level);
    std::size_t ix = Q.index % n, iy = Q.index / n;
    return {Q.level - 1, (iy / 2) * (n / 2) + ix / 2};
}

inline std::vector<Cube> children(const Cube& Q, int dim) {
    if (dim == 1) return {{Q.level + 1, 2 * Q.index}, {Q.level + 1, 2 * Q.index + 1}};
    std::size_t n = cubes_per_axis(Q.level);
    std::size_t ix = Q.index % n, iy = Q.index / n, m = 2 * n;
    std::vector<Cube> c;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t a = 0; a < 2; ++a) c.push_back({Q.level + 1, (2 * iy + b) * m + 2 * ix + a});
    return c;
}

// Cell indices covered by Q, in increasing order.
inline std::vector<std::size_t> cube_cells(const Grid& g, const Cube& Q) {
    std::size_t s = side_cells(g, Q.level);
    std::vector<std::size_t> out;
    if (g.dim() == 1) {
        out.reserve(s);
        for (std::size_t i = 0; i < s; ++i) out.push_back(Q.index * s + i);
        return out;
    }
    std::size_t n = cubes_per_axis(Q.level);
    std::size_t x0 = (Q.index % n) * s, y0 = (Q.index / n) * s;
    out.reserve(s * s);
    for (std::size_t y = y0; y < y0 + s; ++y)
        for (std::size_t x = x0; x < x0 + s; ++x) out.push_back(y * g.cells() + x);
    return out;
}

// Sums of a per-cell quantity over every dyadic cube, built bottom-up by pairwise
// (quadtree) addition so that sums of equal values are exact.
// result[level][index].
inline std::vector<std::vector<double>> pyramid_sums(const Grid& g, std::span<const double> cell_values) {
    if (cell_values.size() != g.size()) throw structural_error("per-cell array has wrong length");
    int L = g.levels();
    std::vector<std::vector<double>> S(L + 1);
    S[L].assign(cell_values.begin(), cell_values.end());
    for (int k = L - 1; k >= 0; --k) {
        S[k].assign(cube_count(g, k), 0.0);
        for (std::size_t i = 0; i < S[k].size(); ++i) {
            double acc = 0;
            for (const Cube& c : children({k, i}, g.dim())) acc += S[k + 1][c.index];
            S[k][i] = acc;
        }
    }
    return S;
}

// Same tree, but with max/min instead of sums.
template <class Op>
std::vector<std::vector<double>> pyramid_reduce(const Grid& g, std::span<const double> cell_values, Op op) {
    int L = g.levels();
    std::vector<std::vector<double>> S(L + 1);
    S[L].assign(cell_values.begin(), cell_values.end());
    for (int k = L - 1; k >= 0; --k) {
        S[k].assign(cube_count(g, k), 0.0);
        for (std::size_t i = 0; i < S[k].size(); ++i) {
            auto ch = children({k, i}, g.dim());
            double acc = S[k + 1][ch[0].index];
            for (std::size_t j = 1; j < ch.size(); ++j) acc = op(acc, S[k + 1][ch[j].index]);
            S[k][i] = acc;
        }
    }
    return S;
}

}  // namespace scz

#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "scz/appendix.hpp"
#include "scz/cz.hpp"
#include "scz/gamma.hpp"
#include "scz/grid.hpp"
#include "scz/kernel.hpp"
#include "scz/kernel_checks.hpp"
#include "scz/sparse.hpp"

namespace scz {

using json = nlohmann::json;

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON has no infinity; non-finite numbers are written as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double num(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

inline json to_json(const Grid& g) { return {{"dim", g.dim()}, {"T", g.T()}, {"cells", g.cells()}}; }
inline Grid grid_from_json(const json& j) {
    return Grid(j.at("dim").get<int>(), j.at("T").get<double>(), j.at("cells").get<std::size_t>());
}

inline json to_json(const FiniteDimSpace& X) {
    json j{{"dim", X.dim()}, {"norm", X.is_euclidean() ? "euclidean" : "lq"}};
    if (!X.is_euclidean()) {
        j["q"] = num(X.q());
        j["type2_constant"] = X.type2_constant();
    }
    return j;
}
inline FiniteDimSpace space_from_json(const json& j) {
    auto n = j.at("dim").get<std::size_t>();
    if (j.value("norm", std::string("euclidean")) == "euclidean") return FiniteDimSpace::euclidean(n);
    return FiniteDimSpace::lq(n, num(j.at("q")), j.value("type2_constant", 1.0));
}

inline json to_json(const GridFunction& f) {
    return {{"grid", to_json(f.grid())}, {"space", to_json(f.space())}, {"values", f.values()}};
}
inline GridFunction grid_function_from_json(const json& j) {
    Grid g = grid_from_json(j.at("grid"));
    FiniteDimSpace X = j.contains("space") ? space_from_json(j.at("space")) : FiniteDimSpace::euclidean(1);
    return GridFunction(g, X, j.at("values").get<std::vector<double>>());
}

inline json to_json(const Weight& w) { return {{"grid", to_json(w.grid())}, {"values", w.values()}}; }
inline Weight weight_from_json(const json& j) {
    return Weight(grid_from_json(j.at("grid")), j.at("values").get<std::vector<double>>());
}

// CSV: one row per cell, "index,v0,v1,...".
inline std::string to_csv(const GridFunction& f) {
    std::ostringstream os;
    os.precision(17);
    os << "index";
    for (std::size_t k = 0; k < f.dim(); ++k) os << ",v" << k;
    os << '\n';
    for (std::size_t i = 0; i < f.size(); ++i) {
        os << i;
        for (std::size_t k = 0; k < f.dim(); ++k) os << ',' << f(i, k);
        os << '\n';
    }
    return os.str();
}

inline std::string to_csv(const Weight& w) {
    std::ostringstream os;
    os.precision(17);
    os << "index,w\n";
    for (std::size_t i = 0; i < w.size(); ++i) os << i << ',' << w[i] << '\n';
    return os.str();
}

namespace detail {

inline std::vector<std::vector<double>> parse_csv_rows(const std::string& text, std::size_t expect_cols) {
    std::istringstream is(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<double> r;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) r.push_back(std::stod(cell));
        if (r.size() != expect_cols) throw structural_error("CSV row has the wrong number of columns");
        if (static_cast<std::size_t>(r[0]) != rows.size()) throw structural_error("CSV rows out of order");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace detail

inline GridFunction grid_function_from_csv(const std::string& text, const Grid& g, const FiniteDimSpace& X) {
    auto rows = detail::parse_csv_rows(text, X.dim() + 1);
    if (rows.size() != g.size()) throw structural_error("CSV row count does not match the grid");
    std::vector<double> v;
    for (auto& r : rows) v.insert(v.end(), r.begin() + 1, r.end());
    return GridFunction(g, X, std::move(v));
}

inline Weight weight_from_csv(const std::string& text, const Grid& g) {
    auto rows = detail::parse_csv_rows(text, 2);
    if (rows.size() != g.size()) throw structural_error("CSV row count does not match the grid");
    std::vector<double> v;
    for (auto& r : rows) v.push_back(r[1]);
    return Weight(g, std::move(v));
}

inline json to_json(const NormEstimate& e) {
    json j{{"value", num(e.value)},
           {"stderr", num(e.stderr_)},
           {"method", method_name(e.method)},
           {"samples", e.samples},
           {"seed", e.seed}};
    if (!e.probe.empty()) j["probe"] = e.probe;
    return j;
}
inline NormEstimate norm_estimate_from_json(const json& j) {
    NormEstimate e;
    e.value = num(j.at("value"));
    e.stderr_ = num(j.at("stderr"));
    auto m = j.at("method").get<std::string>();
    for (Method k : {Method::quadrature, Method::gaussian_mc, Method::power_iteration, Method::probes})
        if (m == method_name(k)) e.method = k;
    e.samples = j.value("samples", std::size_t{0});
    e.seed = j.value("seed", std::uint64_t{0});
    e.probe = j.value("probe", std::string());
    return e;
}

inline json to_json(const Witness& w) {
    return {{"s", w.s}, {"s2", w.s2}, {"t", w.t}, {"t2", w.t2}, {"extra", w.extra}, {"ratio", num(w.ratio)}};
}

inline json to_json(const KernelReport& r) {
    json ws = json::array();
    for (const auto& w : r.witnesses) ws.push_back(to_json(w));
    return {{"condition", condition_name(r.condition)},
            {"constant", num(r.constant)},
            {"pass", r.pass},
            {"witnesses", ws},
            {"grid", {{"T", r.T}, {"cells", r.cells}, {"collar", r.collar}}},
            {"samples", r.samples},
            {"seed", r.seed}};
}

inline json to_json(const SparseCollection& S) {
    json cubes = json::array(), ex = json::array();
    for (const Cube& Q : S.cubes) cubes.push_back({Q.level, Q.index});
    for (const auto& E : S.exceptional) ex.push_back(E);
    return {{"grid", to_json(S.grid)}, {"eta", S.eta}, {"cubes", cubes}, {"exceptional", ex}};
}
inline SparseCollection sparse_collection_from_json(const json& j) {
    SparseCollection S;
    S.grid = grid_from_json(j.at("grid"));
    S.eta = j.at("eta").get<double>();
    for (const auto& c : j.at("cubes")) S.cubes.push_back({c.at(0).get<int>(), c.at(1).get<std::size_t>()});
    for (const auto& e : j.at("exceptional")) S.exceptional.push_back(e.get<std::vector<std::size_t>>());
    std::string why;
    if (!S.verify(&why)) throw structural_error("sparse collection fails its invariants: " + why);
    return S;
}

inline json to_json(const CZDecomposition& d) {
    json pieces = json::array();
    for (const auto& P : d.pieces) pieces.push_back({{"level", P.cube.level}, {"index", P.cube.index}, {"values", P.values}});
    return {{"lambda", d.lambda}, {"f", to_json(d.f)}, {"good", to_json(d.good)}, {"pieces", pieces}};
}

// Loads and re-runs every check; a decomposition that fails them is rejected.
inline CZDecomposition cz_from_json(const json& j) {
    CZDecomposition d;
    d.lambda = j.at("lambda").get<double>();
    d.f = grid_function_from_json(j.at("f"));
    d.good = grid_function_from_json(j.at("good"));
    for (const auto& p : j.at("pieces"))
        d.pieces.push_back({{p.at("level").get<int>(), p.at("index").get<std::size_t>()},
                            p.at("values").get<std::vector<double>>()});
    auto c = d.verify();
    if (!c.all()) throw structural_error("CZ decomposition fails its checks: " + c.failures());
    return d;
}

// ---- kernel zoo by name ----

inline std::vector<std::string> kernel_kinds() {
    return {"zero",     "indicator",   "exponential", "semigroup",  "hilbert_hankel",
            "abs_power", "inverse",    "fractional",  "truncated"};
}

// {"kind": "semigroup", "eigenvalues": [1,4,9]}, {"kind": "exponential", "lambda": 1}, ...
inline Kernel make_kernel(const json& spec) {
    if (!spec.is_object() || !spec.contains("kind")) throw config_error("kernel spec needs a \"kind\" field");
    auto kind = spec.at("kind").get<std::string>();
    try {
        if (kind == "zero") return zero_kernel(spec.value("dim", std::size_t{1}));
        if (kind == "indicator") return indicator_kernel(spec.value("dim", std::size_t{1}));
        if (kind == "exponential") return exponential_kernel(spec.value("lambda", 1.0));
        if (kind == "semigroup") return make_semigroup_kernel(spec.at("eigenvalues").get<std::vector<double>>());
        if (kind == "hilbert_hankel") return hilbert_hankel_kernel(spec.value("c", 1.0));
        if (kind == "abs_power") return abs_power_kernel();
        if (kind == "inverse") return inverse_kernel();
        if (kind == "fractional") {
            // Phi(r) = min(1, r^{-1/2-eps})
            double eps = spec.value("dini_eps", 0.25);
            return make_fractional_kernel([eps](double r) { return std::min(1.0, std::pow(r, -0.5 - eps)); }, eps,
                                          1.0);
        }
        if (kind == "truncated") return truncate_kernel(make_kernel(spec.at("base")), spec.at("truncation_eps").get<double>());
    } catch (const json::exception& e) {
        throw config_error(std::string("bad kernel spec: ") + e.what());
    }
    throw config_error("unknown kernel kind: " + kind);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace scz

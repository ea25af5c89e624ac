#pragma once

// A single coordinate chart carrying a Riemannian metric g and an almost
// complex structure J, plus the sample points at which everything is
// evaluated.
//
// Index convention: metric[i][j] is g_ij (both indices lowered);
// complex_structure[i][j] is J^i_j with the row as the upper index, so
// (Jv)^i = sum_j J^i_j v^j.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qklab/expr.hpp"
#include "qklab/tensor.hpp"

namespace qklab {

class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Point = std::vector<double>;

/// Symbolic partial derivatives of the metric (to third order) and of J
/// (first order), built once per chart.
struct ChartDerivatives {
    int n = 0;
    std::vector<Expr> dg;   // [a][i][j]
    std::vector<Expr> d2g;  // [a][b][i][j]
    std::vector<Expr> d3g;  // [a][b][c][i][j]
    std::vector<Expr> dJ;   // [a][i][j]

    std::size_t idx3(int a, int i, int j) const { return (static_cast<std::size_t>(a) * n + i) * n + j; }
    std::size_t idx4(int a, int b, int i, int j) const { return idx3(a * n + b, i, j); }
    std::size_t idx5(int a, int b, int c, int i, int j) const { return idx4(a * n + b, c, i, j); }
};

struct ManifoldSpec {
    std::string name;
    int m = 0;
    std::vector<std::string> coordinates;
    std::vector<std::pair<std::string, double>> parameters;
    std::vector<std::vector<std::string>> metric_source;
    std::vector<std::vector<std::string>> structure_source;
    std::vector<std::vector<Expr>> metric;
    std::vector<std::vector<Expr>> complex_structure;
    std::vector<Point> sample_points;
    std::shared_ptr<const ChartDerivatives> derivatives;

    int dim() const { return 2 * m; }

    Env env_at(std::span<const double> point) const {
        Env env;
        for (const auto& [k, v] : parameters) env[k] = v;
        for (std::size_t i = 0; i < coordinates.size(); ++i) env[coordinates[i]] = point[i];
        return env;
    }
};

// ---------------------------------------------------------------------------
// Construction

namespace detail {

inline std::shared_ptr<const ChartDerivatives> build_derivatives(const ManifoldSpec& spec) {
    const int n = spec.dim();
    auto d = std::make_shared<ChartDerivatives>();
    d->n = n;
    const std::size_t n2 = static_cast<std::size_t>(n) * n;
    d->dg.resize(n2 * n);
    d->d2g.resize(n2 * n2);
    d->d3g.resize(n2 * n2 * n);
    d->dJ.resize(n2 * n);
    const auto& x = spec.coordinates;

    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Expr& gij = spec.metric[i][j];
            for (int a = 0; a < n; ++a) {
                const Expr da = differentiate(gij, x[a]);
                d->dg[d->idx3(a, i, j)] = d->dg[d->idx3(a, j, i)] = da;
                for (int b = a; b < n; ++b) {
                    const Expr dab = differentiate(da, x[b]);
                    for (auto [p, q] : {std::pair{a, b}, std::pair{b, a}})
                        d->d2g[d->idx4(p, q, i, j)] = d->d2g[d->idx4(p, q, j, i)] = dab;
                    for (int c = b; c < n; ++c) {
                        const Expr dabc = differentiate(dab, x[c]);
                        const int perm[6][3] = {{a, b, c}, {a, c, b}, {b, a, c},
                                                {b, c, a}, {c, a, b}, {c, b, a}};
                        for (const auto& p : perm) {
                            d->d3g[d->idx5(p[0], p[1], p[2], i, j)] = dabc;
                            d->d3g[d->idx5(p[0], p[1], p[2], j, i)] = dabc;
                        }
                    }
                }
            }
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < n; ++a)
                d->dJ[d->idx3(a, i, j)] = differentiate(spec.complex_structure[i][j], x[a]);
    return d;
}

inline std::vector<std::vector<Expr>> parse_matrix(const std::vector<std::vector<std::string>>& src,
                                                   const char* field,
                                                   const std::set<std::string>& declared) {
    std::vector<std::vector<Expr>> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
        for (std::size_t j = 0; j < src[i].size(); ++j) {
            const std::string where =
                std::string(field) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            Expr e;
            try {
                e = parse(src[i][j]);
            } catch (const ParseError& err) {
                throw ManifestError(where + ": " + err.what());
            }
            for (const auto& s : symbols(e))
                if (!declared.contains(s)) throw ManifestError(where + ": undeclared symbol '" + s + "'");
            out[i].push_back(std::move(e));
        }
    return out;
}

}  // namespace detail

/// Assembles and checks a chart from already-extracted fields. Enforces
/// shapes, declared symbols and structural symmetry of the metric.
inline ManifoldSpec make_spec(std::string name, int m, std::vector<std::string> coordinates,
                              std::vector<std::pair<std::string, double>> parameters,
                              std::vector<std::vector<std::string>> metric,
                              std::vector<std::vector<std::string>> structure,
                              std::vector<Point> sample_points) {
    if (m < 1) throw ManifestError("m must be a positive integer");
    const std::size_t n = 2 * static_cast<std::size_t>(m);
    if (coordinates.size() != n)
        throw ManifestError("coordinates: expected " + std::to_string(n) + " names, got " +
                            std::to_string(coordinates.size()));
    std::set<std::string> declared;
    for (const auto& c : coordinates) {
        if (c.empty() || c == "pi" || func_from_name(c))
            throw ManifestError("coordinates: invalid symbol name '" + c + "'");
        if (!declared.insert(c).second) throw ManifestError("coordinates: duplicate symbol '" + c + "'");
    }
    for (const auto& [p, v] : parameters) {
        if (p.empty() || p == "pi" || func_from_name(p))
            throw ManifestError("parameters: invalid symbol name '" + p + "'");
        if (!declared.insert(p).second) throw ManifestError("parameters: duplicate symbol '" + p + "'");
        if (!std::isfinite(v)) throw ManifestError("parameters: non-finite value for '" + p + "'");
    }
    auto check_shape = [n](const std::vector<std::vector<std::string>>& mat, const char* field) {
        bool ok = mat.size() == n;
        for (const auto& row : mat) ok = ok && row.size() == n;
        if (!ok) {
            const std::size_t cols = mat.empty() ? 0 : mat.front().size();
            throw ManifestError(std::string(field) + ": expected a " + std::to_string(n) + "x" +
                                std::to_string(n) + " matrix, got " + std::to_string(mat.size()) + "x" +
                                std::to_string(cols));
        }
    };
    check_shape(metric, "metric");
    check_shape(structure, "complex_structure");
    if (sample_points.empty()) throw ManifestError("sample_points: at least one point is required");
    for (std::size_t p = 0; p < sample_points.size(); ++p) {
        if (sample_points[p].size() != n)
            throw ManifestError("sample_points[" + std::to_string(p) + "]: expected " + std::to_string(n) +
                                " coordinates");
        for (double v : sample_points[p])
            if (!std::isfinite(v))
                throw ManifestError("sample_points[" + std::to_string(p) + "]: non-finite coordinate");
    }

    ManifoldSpec spec;
    spec.name = std::move(name);
    spec.m = m;
    spec.coordinates = std::move(coordinates);
    spec.parameters = std::move(parameters);
    spec.metric = detail::parse_matrix(metric, "metric", declared);
    spec.complex_structure = detail::parse_matrix(structure, "complex_structure", declared);
    spec.metric_source = std::move(metric);
    spec.structure_source = std::move(structure);
    spec.sample_points = std::move(sample_points);

    for (std::size_t p = 0; p < spec.sample_points.size(); ++p) {
        const Env env = spec.env_at(spec.sample_points[p]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double a = 0.0, b = 0.0;
                try {
                    a = eval(spec.metric[i][j], env);
                    b = eval(spec.metric[j][i], env);
                } catch (const EvalError&) {
                    continue;  // reported by validate()
                }
                if (std::abs(a - b) > 1e-12)
                    throw ManifestError("metric: entries [" + std::to_string(i) + "][" + std::to_string(j) +
                                        "] and [" + std::to_string(j) + "][" + std::to_string(i) +
                                        "] differ at sample point " + std::to_string(p));
            }
    }
    spec.derivatives = detail::build_derivatives(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Manifest I/O

inline std::vector<Point> parse_points(const nlohmann::json& j, const std::string& field = "sample_points") {
    if (!j.is_array()) throw ManifestError(field + ": expected an array of coordinate tuples");
    std::vector<Point> pts;
    for (std::size_t p = 0; p < j.size(); ++p) {
        const auto& row = j[p];
        if (!row.is_array()) throw ManifestError(field + "[" + std::to_string(p) + "]: expected an array");
        Point pt;
        for (const auto& v : row) {
            if (!v.is_number()) throw ManifestError(field + "[" + std::to_string(p) + "]: expected numbers");
            pt.push_back(v.get<double>());
        }
        pts.push_back(std::move(pt));
    }
    return pts;
}

inline ManifoldSpec load_manifest(std::string_view document) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ManifestError("manifest must be a JSON object");
    static const std::set<std::string> known = {"name",   "m",        "coordinates",       "parameters",
                                                "metric", "complex_structure", "sample_points"};
    for (const auto& [k, v] : j.items())
        if (!known.contains(k)) throw ManifestError("unknown key '" + k + "'");
    for (const auto& k : known)
        if (k != "parameters" && !j.contains(k)) throw ManifestError("missing field '" + k + "'");

    if (!j["name"].is_string()) throw ManifestError("name: expected a string");
    if (!j["m"].is_number_integer()) throw ManifestError("m: expected an integer");
    auto strings = [](const nlohmann::ordered_json& a, const std::string& field) {
        if (!a.is_array()) throw ManifestError(field + ": expected an array");
        std::vector<std::string> out;
        for (const auto& v : a) {
            if (!v.is_string()) throw ManifestError(field + ": expected strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    };
    auto matrix = [&](const nlohmann::ordered_json& a, const std::string& field) {
        if (!a.is_array()) throw ManifestError(field + ": expected an array of rows");
        std::vector<std::vector<std::string>> out;
        for (std::size_t r = 0; r < a.size(); ++r) out.push_back(strings(a[r], field + "[" + std::to_string(r) + "]"));
        return out;
    };
    std::vector<std::pair<std::string, double>> params;
    if (j.contains("parameters")) {
        if (!j["parameters"].is_object()) throw ManifestError("parameters: expected an object");
        for (const auto& [k, v] : j["parameters"].items()) {
            if (!v.is_number()) throw ManifestError("parameters." + k + ": expected a number");
            params.emplace_back(k, v.get<double>());
        }
    }
    return make_spec(j["name"].get<std::string>(), j["m"].get<int>(), strings(j["coordinates"], "coordinates"),
                     std::move(params), matrix(j["metric"], "metric"),
                     matrix(j["complex_structure"], "complex_structure"), parse_points(j["sample_points"]));
}

inline nlohmann::ordered_json manifest_json(const ManifoldSpec& spec) {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["m"] = spec.m;
    j["coordinates"] = spec.coordinates;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : spec.parameters) params[k] = v;
    j["parameters"] = params;
    j["metric"] = spec.metric_source;
    j["complex_structure"] = spec.structure_source;
    j["sample_points"] = spec.sample_points;
    return j;
}

inline std::string emit_manifest(const ManifoldSpec& spec) { return manifest_json(spec).dump(2) + "\n"; }

inline ManifoldSpec with_parameter(const ManifoldSpec& spec, const std::string& name, double value) {
    auto params = spec.parameters;
    auto it = std::find_if(params.begin(), params.end(), [&](const auto& p) { return p.first == name; });
    if (it == params.end()) throw ManifestError("unknown parameter '" + name + "'");
    it->second = value;
    return make_spec(spec.name, spec.m, spec.coordinates, std::move(params), spec.metric_source,
                     spec.structure_source, spec.sample_points);
}

inline ManifoldSpec with_sample_points(const ManifoldSpec& spec, std::vector<Point> points) {
    return make_spec(spec.name, spec.m, spec.coordinates, spec.parameters, spec.metric_source,
                     spec.structure_source, std::move(points));
}

// ---------------------------------------------------------------------------
// Pointwise evaluation

inline Matrix eval_matrix(const std::vector<std::vector<Expr>>& mat, const Env& env) {
    const int n = static_cast<int>(mat.size());
    Matrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = eval(mat[i][j], env);
    return out;
}

inline Matrix metric_at(const ManifoldSpec& spec, std::span<const double> point) {
    return eval_matrix(spec.metric, spec.env_at(point));
}

inline Matrix structure_at(const ManifoldSpec& spec, std::span<const double> point) {
    return eval_matrix(spec.complex_structure, spec.env_at(point));
}

/// Smallest Cholesky pivot of a symmetric matrix, or nullopt if a pivot
/// falls to 1e-12 or below (not positive definite).
inline std::optional<double> cholesky_min_pivot(const Matrix& a) {
    const int n = a.dim();
    Matrix l(n);
    double min_pivot = INFINITY;
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 1e-12)) return std::nullopt;
        min_pivot = std::min(min_pivot, d);
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return min_pivot;
}

struct Violation {
    std::size_t point_index = 0;
    Point point;
    std::string condition;
    std::optional<double> residual;  // absent for evaluation failures
};

/// Checks every pointwise chart invariant at every sample point.
inline std::vector<Violation> validate(const ManifoldSpec& spec, double tol = 1e-10) {
    std::vector<Violation> out;
    const int n = spec.dim();
    for (std::size_t p = 0; p < spec.sample_points.size(); ++p) {
        const Point& pt = spec.sample_points[p];
        auto report = [&](std::string cond, std::optional<double> r) {
            out.push_back({p, pt, std::move(cond), r});
        };
        Matrix g, J;
        try {
            g = metric_at(spec, pt);
            J = structure_at(spec, pt);
        } catch (const EvalError& e) {
            report(std::string("evaluation error: ") + e.what(), std::nullopt);
            continue;
        }
        const double asym = max_abs_diff(g, transpose(g));
        if (asym > 1e-12) report("metric not symmetric", asym);
        if (!cholesky_min_pivot(g)) {
            double min_diag = INFINITY;
            for (int i = 0; i < n; ++i) min_diag = std::min(min_diag, g(i, i));
            report("metric not positive definite", min_diag);
        }
        const double jj = (matmul(J, J) + identity_matrix(n)).inf_norm();
        if (jj > tol) report("J^2 + I != 0", jj);
        const double herm = max_abs_diff(matmul(transpose(J), matmul(g, J)), g);
        if (herm > tol) report("J^T g J != g", herm);
    }
    return out;
}

/// A g-orthonormal basis at a point; basis[a] holds chart components.
struct PointFrame {
    Point point;
    std::vector<Vector> basis;
};

/// Gram-Schmidt of the coordinate basis under g, in declared coordinate order.
inline std::vector<Vector> gram_schmidt(const Matrix& g) {
    const int n = g.dim();
    std::vector<Vector> basis;
    for (int a = 0; a < n; ++a) {
        Vector v(n);
        v(a) = 1.0;
        for (const Vector& e : basis) {
            const double proj = bilinear(g, e, v);
            for (int i = 0; i < n; ++i) v(i) -= proj * e(i);
        }
        const double nn = bilinear(g, v, v);
        if (!(nn > 1e-12)) throw GeometryError("metric is not positive definite (Gram-Schmidt pivot <= 0)");
        const double inv = 1.0 / std::sqrt(nn);
        for (int i = 0; i < n; ++i) v(i) *= inv;
        basis.push_back(std::move(v));
    }
    return basis;
}

inline PointFrame orthonormal_frame(const ManifoldSpec& spec, std::span<const double> point) {
    const Matrix g = metric_at(spec, point);
    if (!cholesky_min_pivot(g)) throw GeometryError("metric is not positive definite at the point");
    return {Point(point.begin(), point.end()), gram_schmidt(g)};
}

inline Matrix gram_matrix(const Matrix& g, const std::vector<Vector>& basis) {
    const int k = static_cast<int>(basis.size());
    Matrix out(k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) out(a, b) = bilinear(g, basis[a], basis[b]);
    return out;
}

}  // namespace qklab

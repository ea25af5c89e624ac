#pragma once

// Built-in analytic charts with known behaviour. Each entry carries the
// expectations the engine has to reproduce, and where each expectation
// comes from.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qklab/chart.hpp"
#include "qklab/curvature.hpp"
#include "qklab/hermitian.hpp"
#include "qklab/verdict.hpp"

namespace qklab {

/// Everything computed for one chart, shared by expectations and reports.
struct ChartRun {
    ManifoldSpec spec;
    Tolerances tol;
    std::vector<Violation> violations;
    std::vector<PointAnalysis> analyses;
    LemmaReport lemma;
    TheoremVerdict verdict;
};

/// Validates, then (only if valid) analyzes every sample point.
inline ChartRun run_chart(const ManifoldSpec& spec, const Tolerances& tol) {
    ChartRun r{spec, tol, validate(spec), {}, {}, {}};
    if (!r.violations.empty()) return r;
    r.analyses = analyze_points(spec, tol);
    r.lemma = lemma_report(r.analyses, spec.m);
    r.verdict = theorem_classify(spec.m, r.analyses, tol);
    return r;
}

struct ExpectationOutcome {
    bool pass = false;
    double observed = 0.0;
};

struct Expectation {
    std::string name;
    std::string provenance;
    std::function<ExpectationOutcome(const ChartRun&)> check;
};

struct GalleryEntry {
    ManifoldSpec spec;
    std::string description;
    std::vector<Expectation> expectations;
};

namespace gallery_detail {

using Rows = std::vector<std::vector<std::string>>;

inline std::string num_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline Rows diagonal(const std::vector<std::string>& d) {
    const std::size_t n = d.size();
    Rows r(n, std::vector<std::string>(n, "0"));
    for (std::size_t i = 0; i < n; ++i) r[i][i] = d[i];
    return r;
}

inline Rows standard_j() {
    return {{"0", "-1", "0", "0"}, {"1", "0", "0", "0"}, {"0", "0", "0", "-1"}, {"0", "0", "1", "0"}};
}

// --- reusable expectation builders -----------------------------------------

inline Expectation valid_chart() {
    return {"chart validates at every sample point", "chart invariants",
            [](const ChartRun& r) { return ExpectationOutcome{r.violations.empty(), double(r.violations.size())}; }};
}

inline Expectation class_everywhere(ClassCheck c, Membership want, std::string provenance) {
    return {std::string(to_string(c)) + " = " + std::string(to_string(want)) + " at every point", std::move(provenance),
            [c, want](const ChartRun& r) {
                bool ok = !r.analyses.empty();
                double worst = want == Membership::yes ? 0.0 : INFINITY;
                for (const auto& pa : r.analyses) {
                    const auto& res = pa.classes[c];
                    ok = ok && res.verdict == want;
                    worst = want == Membership::yes ? std::max(worst, res.relative) : std::min(worst, res.relative);
                }
                return ExpectationOutcome{ok, worst};
            }};
}

/// Lower bound on the max-abs component of a residual, at every point.
inline Expectation raw_at_least(ClassCheck c, double bound, std::string provenance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " magnitude >= %g at every point", bound);
    return {std::string(to_string(c)) + buf, std::move(provenance), [c, bound](const ChartRun& r) {
                double worst = INFINITY;
                for (const auto& pa : r.analyses) worst = std::min(worst, pa.classes[c].raw);
                return ExpectationOutcome{!r.analyses.empty() && worst >= bound, worst};
            }};
}

inline Expectation bianchi_identities() {
    return {"first and second Bianchi residuals <= 1e-7 * scale", "identities of any Levi-Civita curvature",
            [](const ChartRun& r) {
                double worst = 0.0;
                for (const auto& pa : r.analyses) {
                    const auto br = bianchi_residuals(pa.bundle.R, pa.bundle.nablaR);
                    worst = std::max({worst, br.first.inf_norm() / pa.bundle.scale,
                                      br.second.inf_norm() / pa.bundle.scale});
                }
                return ExpectationOutcome{!r.analyses.empty() && worst <= 1e-7, worst};
            }};
}

inline Expectation tau_everywhere(double want, std::string provenance) {
    return {"scalar curvature = " + num_text(want) + " within 1e-8 * scale", std::move(provenance),
            [want](const ChartRun& r) {
                double worst = 0.0;
                for (const auto& pa : r.analyses) worst = std::max(worst, std::abs(pa.bundle.tau - want) / pa.bundle.scale);
                return ExpectationOutcome{!r.analyses.empty() && worst <= 1e-8, worst};
            }};
}

inline Expectation parallel_ricci(std::string provenance) {
    return {"Ricci tensor parallel (|nabla S| <= 1e-8 * scale)", std::move(provenance), [](const ChartRun& r) {
                double worst = 0.0;
                for (const auto& pa : r.analyses) worst = std::max(worst, pa.bundle.nablaS.inf_norm() / pa.bundle.scale);
                return ExpectationOutcome{!r.analyses.empty() && worst <= 1e-8, worst};
            }};
}

/// Ricci eigenvalues {l1, l1, l2, l2} of the endomorphism g^-1 S within 1e-6.
inline Expectation ricci_spectrum(double l1, double l2, std::string provenance) {
    return {"Ricci eigenvalues {" + num_text(l1) + ", " + num_text(l2) + "} each doubled within 1e-6",
            std::move(provenance), [l1, l2](const ChartRun& r) {
                double worst = 0.0;
                for (const auto& pa : r.analyses) {
                    const auto& b = pa.bundle;
                    Matrix a(b.jet.n);
                    for (int p = 0; p < b.jet.n; ++p)
                        for (int q = 0; q < b.jet.n; ++q) a(p, q) = bilinear(b.S, pa.frame[p], pa.frame[q]);
                    const auto eig = jacobi_eigen(a);
                    const double want[4] = {l1, l1, l2, l2};
                    for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(eig.values[k] - want[k]));
                }
                return ExpectationOutcome{!r.analyses.empty() && worst <= 1e-6, worst};
            }};
}

inline Expectation verdict_is(VerdictKind kind, std::optional<double> c, std::string provenance) {
    std::string name = "theorem verdict " + std::string(to_string(kind));
    if (c) name += " with c = " + num_text(*c) + " within 1e-6";
    return {name, std::move(provenance), [kind, c](const ChartRun& r) {
                const bool kind_ok = r.verdict.kind == kind;
                if (!c) return ExpectationOutcome{kind_ok, r.verdict.c};
                return ExpectationOutcome{kind_ok && std::abs(r.verdict.c - *c) <= 1e-6, r.verdict.c};
            }};
}

inline Expectation coordinate_plane_curvature(double want, std::string provenance) {
    return {"sectional curvature of coordinate planes = " + num_text(want) + " within 1e-6",
            std::move(provenance), [want](const ChartRun& r) {
                double worst = 0.0;
                for (const auto& pa : r.analyses) {
                    const int n = pa.bundle.jet.n;
                    for (int a = 0; a < n; ++a)
                        for (int b = a + 1; b < n; ++b) {
                            Vector x(n), y(n);
                            x(a) = 1.0;
                            y(b) = 1.0;
                            worst = std::max(worst,
                                             std::abs(sectional_curvature(pa.bundle.jet.g, pa.bundle.R, x, y) - want));
                        }
                }
                return ExpectationOutcome{!r.analyses.empty() && worst <= 1e-6, worst};
            }};
}

// --- entries ---------------------------------------------------------------

inline GalleryEntry flat_c2() {
    GalleryEntry e;
    e.description = "Euclidean R^4 with the standard complex structure";
    e.spec = make_spec("flat_c2", 2, {"x1", "x2", "x3", "x4"}, {}, diagonal({"1", "1", "1", "1"}), standard_j(),
                       {{0.0, 0.0, 0.0, 0.0},
                        {0.5, -0.3, 1.2, 0.7},
                        {-1.1, 2.0, 0.4, -0.6},
                        {3.0, 0.25, -2.5, 1.5},
                        {-0.8, -1.4, 0.9, 2.2}});
    const std::string prov = "flat space: every tensor vanishes";
    e.expectations = {valid_chart(), bianchi_identities()};
    for (ClassCheck c : all_class_checks) e.expectations.push_back(class_everywhere(c, Membership::yes, prov));
    e.expectations.push_back(tau_everywhere(0.0, prov));
    e.expectations.push_back(ricci_spectrum(0.0, 0.0, prov));
    e.expectations.push_back(verdict_is(VerdictKind::constant_curvature, 0.0, prov));
    return e;
}

inline GalleryEntry s2xh2(double c = 1.0) {
    GalleryEntry e;
    e.description = "round sphere of curvature c times hyperbolic plane of curvature -c";
    e.spec = make_spec("s2xh2", 2, {"theta", "phi", "x", "y"}, {{"c", c}},
                       diagonal({"1/c", "sin(theta)^2/c", "1/(c*y^2)", "1/(c*y^2)"}),
                       {{"0", "sin(theta)", "0", "0"},
                        {"-1/sin(theta)", "0", "0", "0"},
                        {"0", "0", "0", "1"},
                        {"0", "0", "-1", "0"}},
                       {{1.0471975511965976, 0.5, 0.2, 1.3},
                        {0.8, 1.0, -0.4, 0.7},
                        {1.2, 2.0, 0.9, 1.8},
                        {2.0, -1.1, 0.0, 0.5},
                        {2.4, 3.0, -1.5, 1.1}});
    const std::string prov = "closed-form surface curvature: sphere +c, hyperbolic plane -c";
    e.expectations = {
        valid_chart(),
        bianchi_identities(),
        class_everywhere(ClassCheck::kahler, Membership::yes, "area forms of surfaces are parallel"),
        class_everywhere(ClassCheck::conformal, Membership::yes, "product of surfaces of opposite constant curvature"),
        class_everywhere(ClassCheck::identity3, Membership::yes, "Kahler curvature is J-invariant"),
        parallel_ricci("product of constant-curvature factors is locally symmetric"),
        tau_everywhere(0.0, "factor scalar curvatures 2c and -2c cancel"),
        ricci_spectrum(c, -c, prov),
        verdict_is(VerdictKind::product_of_surfaces, c, prov),
    };
    return e;
}

inline GalleryEntry s2xs2(double c = 1.0) {
    GalleryEntry e;
    e.description = "product of two round spheres of curvature c";
    e.spec = make_spec("s2xs2", 2, {"theta", "phi", "psi", "chi"}, {{"c", c}},
                       diagonal({"1/c", "sin(theta)^2/c", "1/c", "sin(psi)^2/c"}),
                       {{"0", "sin(theta)", "0", "0"},
                        {"-1/sin(theta)", "0", "0", "0"},
                        {"0", "0", "0", "sin(psi)"},
                        {"0", "0", "-1/sin(psi)", "0"}},
                       {{0.7, 0.3, 1.9, -0.4},
                        {1.1, 1.2, 0.9, 2.2},
                        {1.6, -0.8, 2.3, 0.5},
                        {2.1, 2.5, 1.3, -1.7},
                        {2.45, 0.0, 0.65, 1.0}});
    e.expectations = {
        valid_chart(),
        bianchi_identities(),
        class_everywhere(ClassCheck::kahler, Membership::yes, "product of Kahler surfaces"),
        ricci_spectrum(c, c, "Einstein: each factor has Ricci c g"),
        raw_at_least(ClassCheck::conformal, 0.1, "equal-sign product is not conformally flat; direct Weyl evaluation"),
        verdict_is(VerdictKind::not_applicable, std::nullopt, "conformal flatness fails"),
    };
    return e;
}

inline GalleryEntry h4_constJ() {
    GalleryEntry e;
    e.description = "Poincare ball (curvature -1) with the constant standard complex structure";
    const std::string g = "4/(1-(x1^2+x2^2+x3^2+x4^2))^2";
    e.spec = make_spec("h4_constJ", 2, {"x1", "x2", "x3", "x4"}, {}, diagonal({g, g, g, g}), standard_j(),
                       {{0.3, 0.0, 0.0, 0.0},
                        {0.1, 0.2, -0.15, 0.1},
                        {-0.2, 0.3, 0.1, -0.25},
                        {0.25, -0.1, 0.3, 0.2},
                        {0.0, 0.0, 0.4, -0.2}});
    const std::string prov = "Poincare-ball closed form";
    e.expectations = {
        valid_chart(),
        bianchi_identities(),
        coordinate_plane_curvature(-1.0, prov),
        tau_everywhere(-12.0, prov),
        ricci_spectrum(-3.0, -3.0, "Einstein constant (n-1)c = -3"),
        class_everywhere(ClassCheck::conformal, Membership::yes, "conformal to flat by construction"),
        class_everywhere(ClassCheck::identity3, Membership::yes, "constant-curvature R with compatible J"),
        raw_at_least(ClassCheck::quasi_kahler, 0.1, "hand expansion of nabla J for a conformal metric with constant J"),
        verdict_is(VerdictKind::not_applicable, std::nullopt, "quasi-Kahler condition fails"),
    };
    return e;
}

inline GalleryEntry conf_flat_generic() {
    GalleryEntry e;
    e.description = "conformally flat metric exp(2u) delta with non-constant scalar curvature";
    const std::string g = "exp(2*(0.1*sin(x1)*cos(x2) + 0.05*x3))";
    e.spec = make_spec("conf_flat_generic", 2, {"x1", "x2", "x3", "x4"}, {}, diagonal({g, g, g, g}), standard_j(),
                       {{0.3, 0.7, -0.5, 1.1},
                        {1.2, -0.4, 0.8, -0.9},
                        {-0.6, 1.5, 0.2, 0.3},
                        {2.0, 0.1, -1.2, 0.5},
                        {-1.1, -0.8, 1.5, -0.2}});
    e.expectations = {
        valid_chart(),
        bianchi_identities(),
        class_everywhere(ClassCheck::conformal, Membership::yes, "conformal to flat by construction"),
        {"scalar curvature differential non-zero (|dtau| >= 1e-3) at every point", "u is not harmonic-trivial",
         [](const ChartRun& r) {
             double worst = INFINITY;
             for (const auto& pa : r.analyses) worst = std::min(worst, pa.bundle.dtau.inf_norm());
             return ExpectationOutcome{!r.analyses.empty() && worst >= 1e-3, worst};
         }},
        {"contracted-Bianchi relation for conformally flat metrics (eq5, eq6) <= 1e-7 * scale",
         "consequence of conformal flatness alone", [](const ChartRun& r) {
             double worst = 0.0;
             for (const auto& p : r.lemma.points) worst = std::max({worst, p.eq5, p.eq6});
             return ExpectationOutcome{!r.lemma.points.empty() && worst <= 1e-7, worst};
         }},
    };
    return e;
}

inline GalleryEntry kodaira_thurston() {
    GalleryEntry e;
    e.description = "Kodaira-Thurston nilmanifold chart with its almost Kahler structure";
    e.spec = make_spec("kodaira_thurston", 2, {"x", "y", "z", "t"}, {},
                       {{"1", "0", "0", "0"}, {"0", "1+x^2", "-x", "0"}, {"0", "-x", "1", "0"}, {"0", "0", "0", "1"}},
                       {{"0", "x", "-1", "0"}, {"0", "0", "0", "-1"}, {"1", "0", "0", "-x"}, {"0", "1", "0", "0"}},
                       {{0.5, 0.1, -0.3, 0.8},
                        {1.2, -0.7, 0.4, 0.0},
                        {-0.8, 0.3, 1.1, -0.5},
                        {0.3, 2.0, -1.0, 0.6},
                        {-1.5, -0.4, 0.2, 1.3}});
    e.expectations = {
        valid_chart(),
        bianchi_identities(),
        class_everywhere(ClassCheck::almost_kahler, Membership::yes, "symplectic form e1^e3 + e2^e4 is closed"),
        class_everywhere(ClassCheck::quasi_kahler, Membership::yes, "almost Kahler implies quasi Kahler"),
        raw_at_least(ClassCheck::kahler, 0.1, "non-Kahler almost Kahler structure; direct computation"),
        class_everywhere(ClassCheck::nearly_kahler, Membership::no, "in dimension 4 nearly Kahler equals Kahler"),
    };
    return e;
}

}  // namespace gallery_detail

inline std::vector<std::string> gallery_names() {
    return {"flat_c2", "s2xh2", "s2xs2", "h4_constJ", "conf_flat_generic", "kodaira_thurston"};
}

/// Gallery entry by name. Parameter overrides (e.g. c) are applied to the
/// chart and to every expectation that depends on them.
inline GalleryEntry gallery_entry(const std::string& name,
                                  const std::vector<std::pair<std::string, double>>& params = {}) {
    using namespace gallery_detail;
    double c = 1.0;
    for (const auto& [k, v] : params) {
        if (k != "c" || (name != "s2xh2" && name != "s2xs2"))
            throw ManifestError("gallery entry '" + name + "' has no parameter '" + k + "'");
        c = v;
    }
    if (name == "flat_c2") return flat_c2();
    if (name == "s2xh2") return s2xh2(c);
    if (name == "s2xs2") return s2xs2(c);
    if (name == "h4_constJ") return h4_constJ();
    if (name == "conf_flat_generic") return conf_flat_generic();
    if (name == "kodaira_thurston") return kodaira_thurston();
    throw ManifestError("unknown gallery entry '" + name + "'");
}

inline std::vector<GalleryEntry> entries() {
    std::vector<GalleryEntry> out;
    for (const auto& n : gallery_names()) out.push_back(gallery_entry(n));
    return out;
}

}  // namespace qklab

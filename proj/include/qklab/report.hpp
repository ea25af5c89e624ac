#pragma once

// Machine- and human-readable reports behind the command-line tool.
// Every report is built as an ordered JSON document first; the text form
// is rendered from the same document so both carry identical numbers.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qklab/chart.hpp"
#include "qklab/fdcheck.hpp"
#include "qklab/gallery.hpp"
#include "qklab/verdict.hpp"

namespace qklab {

using ojson = nlohmann::ordered_json;

enum class OutputFormat { text, json };

struct RunConfig {
    Tolerances tol;
    OutputFormat format = OutputFormat::text;
    std::optional<std::vector<Point>> points;
};

/// Process exit codes.
enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 1,
    exit_hypothesis = 2,
    exit_inconsistent = 3,
};

struct Report {
    ojson doc;
    int exit_code = exit_ok;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline ojson config_json(const RunConfig& cfg) {
    ojson j;
    j["tol"] = cfg.tol.membership;
    j["nonmember"] = cfg.tol.nonmember;
    j["gap"] = cfg.tol.eigen_gap;
    return j;
}

inline ojson violations_json(const std::vector<Violation>& vs) {
    ojson out = ojson::array();
    for (const auto& v : vs) {
        ojson j;
        j["point"] = v.point_index;
        j["coords"] = v.point;
        j["condition"] = v.condition;
        j["residual"] = v.residual ? ojson(*v.residual) : ojson(nullptr);
        out.push_back(std::move(j));
    }
    return out;
}

inline ojson verdict_json(const TheoremVerdict& v) {
    ojson j;
    j["kind"] = std::string(to_string(v.kind));
    if (v.kind == VerdictKind::constant_curvature || v.kind == VerdictKind::product_of_surfaces) j["c"] = v.c;
    j["reasons"] = v.reasons;
    ojson d = ojson::object();
    for (const auto& [k, x] : v.diagnostics) d[k] = x;
    j["diagnostics"] = d;
    ojson eig = ojson::array();
    for (const auto& e : v.eigen) {
        ojson ej;
        ej["lambda1"] = e.lambda1;
        ej["lambda2"] = e.lambda2;
        ej["e1"] = std::vector<double>(e.e1.flat().begin(), e.e1.flat().end());
        ej["e2"] = std::vector<double>(e.e2.flat().begin(), e.e2.flat().end());
        eig.push_back(std::move(ej));
    }
    j["eigen"] = eig;
    return j;
}

/// Inclusion consistency: K => NK, AK, QK; AK => QK; NK => QK.
inline std::vector<std::string> inclusion_violations(const ClassReport& c) {
    std::vector<std::string> out;
    auto yes = [&c](ClassCheck k) { return c[k].member; };
    if (yes(ClassCheck::kahler) && !yes(ClassCheck::nearly_kahler)) out.emplace_back("kahler without nearly_kahler");
    if (yes(ClassCheck::kahler) && !yes(ClassCheck::almost_kahler)) out.emplace_back("kahler without almost_kahler");
    if (yes(ClassCheck::kahler) && !yes(ClassCheck::quasi_kahler)) out.emplace_back("kahler without quasi_kahler");
    if (yes(ClassCheck::almost_kahler) && !yes(ClassCheck::quasi_kahler))
        out.emplace_back("almost_kahler without quasi_kahler");
    if (yes(ClassCheck::nearly_kahler) && !yes(ClassCheck::quasi_kahler))
        out.emplace_back("nearly_kahler without quasi_kahler");
    return out;
}

/// Full per-point report body for a chart run: residuals, verdicts, lemma data.
inline ojson points_json(const ChartRun& run) {
    ojson pts = ojson::array();
    for (std::size_t p = 0; p < run.analyses.size(); ++p) {
        const auto& pa = run.analyses[p];
        const auto& lem = run.lemma.points[p];
        const auto br = bianchi_residuals(pa.bundle.R, pa.bundle.nablaR);
        ojson j;
        j["coords"] = pa.bundle.point;
        j["scale"] = pa.bundle.scale;
        j["tau"] = pa.bundle.tau;
        ojson res;
        for (ClassCheck c : all_class_checks) res[std::string(to_string(c))] = pa.classes[c].relative;
        res["bianchi1"] = br.first.inf_norm() / pa.bundle.scale;
        res["bianchi2"] = br.second.inf_norm() / pa.bundle.scale;
        res["lemma_eq2"] = lem.eq2;
        res["lemma_eq3"] = lem.eq3;
        res["lemma_eq4"] = lem.eq4;
        res["lemma_eq5"] = lem.eq5;
        res["lemma_eq6"] = lem.eq6;
        res["lemma_step1"] = lem.step1;
        res["lemma_bianchi_instance"] = lem.bianchi_instance;
        res["nabla_S_symmetry"] = lem.nabla_S_symmetry;
        res["nabla_S_J_invariance"] = lem.nabla_S_J_invariance;
        res["nabla_S_norm"] = lem.nabla_S_norm;
        res["dtau_norm"] = lem.dtau_norm;
        j["residuals"] = res;
        ojson mag;
        for (ClassCheck c : all_class_checks) mag[std::string(to_string(c))] = pa.classes[c].raw;
        j["magnitudes"] = mag;
        ojson ver;
        for (ClassCheck c : all_class_checks) ver[std::string(to_string(c))] = std::string(to_string(pa.classes[c].verdict));
        j["verdicts"] = ver;
        pts.push_back(std::move(j));
    }
    return pts;
}

inline Report analyze_report(const ManifoldSpec& spec, const RunConfig& cfg) {
    const ChartRun run = run_chart(spec, cfg.tol);
    Report r;
    r.doc["manifest"] = spec.name;
    r.doc["config"] = config_json(cfg);
    r.doc["validation"] = violations_json(run.violations);
    if (!run.violations.empty()) {
        r.doc["points"] = ojson::array();
        r.exit_code = exit_validation;
        return r;
    }
    r.doc["points"] = points_json(run);
    ojson lemma;
    lemma["tau_deviation"] = run.lemma.tau_deviation;
    lemma["max_dtau"] = run.lemma.max_dtau;
    r.doc["lemma"] = lemma;
    r.doc["verdict"] = verdict_json(run.verdict);

    ojson inconsistencies = ojson::array();
    for (std::size_t p = 0; p < run.analyses.size(); ++p) {
        const auto& pa = run.analyses[p];
        for (const auto& s : inclusion_violations(pa.classes))
            inconsistencies.push_back("point " + std::to_string(p) + ": " + s);
        const auto br = bianchi_residuals(pa.bundle.R, pa.bundle.nablaR);
        if (std::max(br.first.inf_norm(), br.second.inf_norm()) / pa.bundle.scale > cfg.tol.membership)
            inconsistencies.push_back("point " + std::to_string(p) + ": Bianchi identity residual exceeds tolerance");
    }
    r.doc["inconsistencies"] = inconsistencies;
    if (!inconsistencies.empty()) r.exit_code = exit_inconsistent;
    return r;
}

inline Report classify_report(const ManifoldSpec& spec, const RunConfig& cfg) {
    const ChartRun run = run_chart(spec, cfg.tol);
    Report r;
    r.doc["manifest"] = spec.name;
    r.doc["config"] = config_json(cfg);
    r.doc["validation"] = violations_json(run.violations);
    if (!run.violations.empty()) {
        r.exit_code = exit_validation;
        return r;
    }
    r.doc["verdict"] = verdict_json(run.verdict);
    switch (run.verdict.kind) {
        case VerdictKind::not_applicable: r.exit_code = exit_hypothesis; break;
        case VerdictKind::indeterminate: r.exit_code = exit_inconsistent; break;
        default: r.exit_code = exit_ok;
    }
    return r;
}

inline const std::vector<std::string>& equation_names() {
    static const std::vector<std::string> names = {"eq2", "eq3", "eq4", "eq5", "eq6",
                                                   "step1", "bianchi1", "bianchi2", "nablaS"};
    return names;
}

/// Per-point residual table for one named equation. A residual is asserted
/// (and may fail the run) only where the equation's hypotheses hold:
/// the Bianchi identities always; eq5 and eq6 where the metric is
/// conformally flat; the remaining lemma equations where the point is
/// quasi Kahler, satisfies identity (3) and is conformally flat.
inline Report check_report(const ManifoldSpec& spec, const std::string& equation, const RunConfig& cfg) {
    Report r;
    const auto& names = equation_names();
    if (std::find(names.begin(), names.end(), equation) == names.end())
        throw std::invalid_argument("unknown equation '" + equation + "'");
    const ChartRun run = run_chart(spec, cfg.tol);
    r.doc["manifest"] = spec.name;
    r.doc["config"] = config_json(cfg);
    r.doc["equation"] = equation;
    r.doc["validation"] = violations_json(run.violations);
    if (!run.violations.empty()) {
        r.exit_code = exit_validation;
        return r;
    }
    const double eps = cfg.tol.membership;
    ojson rows = ojson::array();
    double max_residual = 0.0;
    bool failed = false;
    for (std::size_t p = 0; p < run.analyses.size(); ++p) {
        const auto& pa = run.analyses[p];
        const auto& lem = run.lemma.points[p];
        const bool conformal = pa.classes[ClassCheck::conformal].member;
        const bool lemma_hyp = conformal && pa.classes[ClassCheck::quasi_kahler].member &&
                               pa.classes[ClassCheck::identity3].member;
        ojson values;
        bool asserted = lemma_hyp;
        if (equation == "eq2") values["residual"] = lem.eq2;
        if (equation == "eq3") values["residual"] = lem.eq3;
        if (equation == "eq4") values["residual"] = lem.eq4;
        if (equation == "eq5") values["residual"] = lem.eq5, asserted = conformal;
        if (equation == "eq6") values["residual"] = lem.eq6, asserted = conformal;
        if (equation == "step1") {
            values["residual"] = lem.step1;
            values["bianchi_instance"] = lem.bianchi_instance;
        }
        if (equation == "bianchi1" || equation == "bianchi2") {
            const auto br = bianchi_residuals(pa.bundle.R, pa.bundle.nablaR);
            const double raw = equation == "bianchi1" ? br.first.inf_norm() : br.second.inf_norm();
            values["residual"] = raw / pa.bundle.scale;
            asserted = true;
        }
        if (equation == "nablaS") {
            values["residual"] = std::max(lem.nabla_S_symmetry, lem.nabla_S_J_invariance);
            values["symmetry"] = lem.nabla_S_symmetry;
            values["j_invariance"] = lem.nabla_S_J_invariance;
            values["norm"] = lem.nabla_S_norm;
        }
        double worst = 0.0;
        for (const auto& [k, v] : values.items()) worst = std::max(worst, v.get<double>());
        max_residual = std::max(max_residual, worst);
        const bool pass = !asserted || worst <= eps;
        failed = failed || !pass;
        ojson row;
        row["coords"] = pa.bundle.point;
        row["residuals"] = values;
        row["asserted"] = asserted;
        row["pass"] = pass;
        rows.push_back(std::move(row));
    }
    r.doc["points"] = rows;
    r.doc["max_residual"] = max_residual;
    r.exit_code = failed ? exit_inconsistent : exit_ok;
    return r;
}

inline Report gallery_list_report() {
    Report r;
    ojson arr = ojson::array();
    for (const auto& e : entries()) {
        ojson j;
        j["name"] = e.spec.name;
        j["description"] = e.description;
        j["points"] = e.spec.sample_points.size();
        j["expectations"] = e.expectations.size();
        arr.push_back(std::move(j));
    }
    r.doc["entries"] = arr;
    return r;
}

/// Runs one gallery entry and evaluates its expectations.
inline ojson gallery_entry_json(const GalleryEntry& e, const RunConfig& cfg, bool& all_pass) {
    const ChartRun run = run_chart(e.spec, cfg.tol);
    ojson j;
    j["manifest"] = e.spec.name;
    j["validation"] = violations_json(run.violations);
    j["points"] = run.violations.empty() ? points_json(run) : ojson::array();
    if (run.violations.empty()) j["verdict"] = verdict_json(run.verdict);
    ojson exps = ojson::array();
    for (const auto& x : e.expectations) {
        const ExpectationOutcome o = x.check(run);
        all_pass = all_pass && o.pass;
        ojson ej;
        ej["name"] = x.name;
        ej["provenance"] = x.provenance;
        ej["observed"] = o.observed;
        ej["pass"] = o.pass;
        exps.push_back(std::move(ej));
    }
    j["expectations"] = exps;
    return j;
}

inline Report gallery_run_all_report(const RunConfig& cfg) {
    Report r;
    bool all_pass = true;
    r.doc["config"] = config_json(cfg);
    ojson arr = ojson::array();
    for (const auto& e : entries()) arr.push_back(gallery_entry_json(e, cfg, all_pass));
    r.doc["entries"] = arr;
    r.doc["passed"] = all_pass;
    r.exit_code = all_pass ? exit_ok : exit_inconsistent;
    return r;
}

inline constexpr double selftest_step = 1e-4;
inline constexpr double selftest_tolerance = 1e-6;

inline Report selftest_report(const RunConfig& cfg) {
    Report r;
    bool all_pass = true;
    r.doc["config"] = config_json(cfg);
    r.doc["step"] = selftest_step;
    r.doc["tolerance"] = selftest_tolerance;
    ojson arr = ojson::array();
    for (const auto& e : entries()) {
        ojson ej;
        ej["name"] = e.spec.name;
        ojson pts = ojson::array();
        double worst = 0.0;
        for (const auto& p : e.spec.sample_points) {
            const FdComparison c = fd_compare(e.spec, p, selftest_step);
            worst = std::max(worst, c.worst());
            ojson pj;
            pj["coords"] = p;
            pj["metric_first"] = c.metric_first;
            pj["metric_third"] = c.metric_third;
            pj["christoffel"] = c.christoffel;
            pj["riemann"] = c.riemann;
            pj["riemann_derivative"] = c.riemann_derivative;
            pts.push_back(std::move(pj));
        }
        ej["points"] = pts;
        ej["max_deviation"] = worst;
        ej["pass"] = worst <= selftest_tolerance;
        all_pass = all_pass && worst <= selftest_tolerance;
        arr.push_back(std::move(ej));
    }
    r.doc["entries"] = arr;
    r.doc["passed"] = all_pass;
    r.exit_code = all_pass ? exit_ok : exit_inconsistent;
    return r;
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline void render_text(const ojson& j, const std::string& indent, std::ostringstream& out) {
    for (const auto& [key, v] : j.items()) {
        if (v.is_object()) {
            out << indent << key << ":\n";
            render_text(v, indent + "  ", out);
        } else if (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array())) {
            out << indent << key << ":\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                out << indent << "  [" << i << "]\n";
                if (v[i].is_object())
                    render_text(v[i], indent + "    ", out);
                else
                    out << indent << "    " << v[i].dump() << "\n";
            }
        } else if (v.is_array()) {
            out << indent << key << ": ";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out << ", ";
                if (v[i].is_number_float())
                    out << format_double(v[i].get<double>());
                else if (v[i].is_string())
                    out << v[i].get<std::string>();
                else
                    out << v[i].dump();
            }
            out << "\n";
        } else if (v.is_number_float()) {
            out << indent << key << ": " << format_double(v.get<double>()) << "\n";
        } else if (v.is_string()) {
            out << indent << key << ": " << v.get<std::string>() << "\n";
        } else {
            out << indent << key << ": " << v.dump() << "\n";
        }
    }
}

}  // namespace detail

inline std::string render(const Report& r, OutputFormat f) {
    if (f == OutputFormat::json) return r.doc.dump(2) + "\n";
    std::ostringstream out;
    detail::render_text(r.doc, "", out);
    return out.str();
}

// ---------------------------------------------------------------------------
// Input helpers

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Resolves a manifest argument: `gallery:NAME` or a path to a manifest file.
inline ManifoldSpec resolve_manifest(const std::string& arg,
                                     const std::vector<std::pair<std::string, double>>& params = {}) {
    if (arg.rfind("gallery:", 0) == 0) return gallery_entry(arg.substr(8), params).spec;
    ManifoldSpec spec = load_manifest(read_file(arg));
    for (const auto& [k, v] : params) spec = with_parameter(spec, k, v);
    return spec;
}

inline std::vector<Point> load_points_file(const std::string& path) {
    ojson j;
    try {
        j = ojson::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestError(std::string("points file: malformed JSON: ") + e.what());
    }
    return parse_points(j, "points");
}

}  // namespace qklab

// qklab: command-line front end for the almost Hermitian verification lab.

#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "qklab/report.hpp"

namespace {

std::pair<std::string, double> parse_param(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--param", "expected NAME=VALUE, got '" + s + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s.substr(eq + 1), &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() - eq - 1)
        throw CLI::ValidationError("--param", "value of '" + s.substr(0, eq) + "' is not a number");
    return {s.substr(0, eq), v};
}

struct Options {
    qklab::RunConfig cfg;
    std::string format = "text";
    std::string points_path;
    std::string manifest;
    std::string equation;
    std::string gallery_name;
    std::vector<std::string> params;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--tol", o.cfg.tol.membership, "membership tolerance (relative)")->capture_default_str();
    sub->add_option("--nonmember", o.cfg.tol.nonmember, "non-membership threshold (relative)")->capture_default_str();
    sub->add_option("--gap", o.cfg.tol.eigen_gap, "minimum Ricci eigenvalue gap")->capture_default_str();
    sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
}

void add_manifest(CLI::App* sub, Options& o) {
    sub->add_option("manifest", o.manifest, "manifest JSON path or gallery:NAME")->required();
    sub->add_option("--points", o.points_path, "JSON file with a replacement sample-point list");
    sub->add_option("--param", o.params, "override a chart parameter, NAME=VALUE");
}

qklab::ManifoldSpec load(const Options& o) {
    std::vector<std::pair<std::string, double>> params;
    for (const auto& p : o.params) params.push_back(parse_param(p));
    qklab::ManifoldSpec spec = qklab::resolve_manifest(o.manifest, params);
    if (!o.points_path.empty()) spec = qklab::with_sample_points(spec, qklab::load_points_file(o.points_path));
    return spec;
}

int emit(const qklab::Report& r, const Options& o) {
    std::cout << qklab::render(r, o.cfg.format);
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curvature and almost Hermitian class verification for coordinate charts"};
    app.require_subcommand(1);
    Options o;

    auto* analyze = app.add_subcommand("analyze", "full per-point report");
    auto* classify = app.add_subcommand("classify", "four-dimensional QK3 conformally flat classification");
    auto* check = app.add_subcommand("check", "residual table for one equation");
    auto* gallery = app.add_subcommand("gallery", "built-in example charts");
    auto* selftest = app.add_subcommand("selftest", "finite-difference cross-check over the gallery");
    for (auto* s : {analyze, classify, check}) add_common(s, o);
    check->add_option("equation", o.equation, "equation name")
        ->required()
        ->check(CLI::IsMember(qklab::equation_names()));
    for (auto* s : {analyze, classify, check}) add_manifest(s, o);
    add_common(selftest, o);

    gallery->require_subcommand(1);
    auto* glist = gallery->add_subcommand("list", "list gallery entries");
    auto* gemit = gallery->add_subcommand("emit", "print a gallery manifest");
    gemit->add_option("name", o.gallery_name, "gallery entry")->required()->check(CLI::IsMember(qklab::gallery_names()));
    gemit->add_option("--param", o.params, "override a chart parameter, NAME=VALUE");
    auto* grun = gallery->add_subcommand("run-all", "run every gallery entry and its expectations");
    add_common(glist, o);
    add_common(grun, o);

    CLI11_PARSE(app, argc, argv);

    o.cfg.format = o.format == "json" ? qklab::OutputFormat::json : qklab::OutputFormat::text;
    if (!(o.cfg.tol.membership > 0.0 && o.cfg.tol.membership < o.cfg.tol.nonmember) || !(o.cfg.tol.eigen_gap > 0.0)) {
        std::cerr << "error: tolerances must satisfy 0 < --tol < --nonmember and --gap > 0\n";
        return qklab::exit_validation;
    }

    try {
        if (*analyze) return emit(qklab::analyze_report(load(o), o.cfg), o);
        if (*classify) return emit(qklab::classify_report(load(o), o.cfg), o);
        if (*check) return emit(qklab::check_report(load(o), o.equation, o.cfg), o);
        if (*selftest) return emit(qklab::selftest_report(o.cfg), o);
        if (*glist) return emit(qklab::gallery_list_report(), o);
        if (*grun) return emit(qklab::gallery_run_all_report(o.cfg), o);
        if (*gemit) {
            std::vector<std::pair<std::string, double>> params;
            for (const auto& p : o.params) params.push_back(parse_param(p));
            std::cout << qklab::emit_manifest(qklab::gallery_entry(o.gallery_name, params).spec);
            return qklab::exit_ok;
        }
    } catch (const qklab::ManifestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qklab::exit_validation;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qklab::exit_validation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qklab::exit_validation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return qklab::exit_inconsistent;
    }
    return qklab::exit_ok;
}

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <string>
#include <sys/wait.h>

#include "qklab/report.hpp"

using namespace qklab;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    CliResult r;
    FILE* p = popen((std::string(QKLAB_CLI) + " " + args + " 2>/dev/null").c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

void collect_floats(const ojson& j, std::vector<double>& out) {
    if (j.is_number_float()) out.push_back(j.get<double>());
    if (j.is_structured())
        for (const auto& v : j) collect_floats(v, out);
}

}  // namespace

TEST_CASE("analyze report follows the documented schema") {
    const Report r = analyze_report(gallery_entry("s2xh2").spec, RunConfig{});
    CHECK(r.exit_code == exit_ok);
    CHECK(r.doc["manifest"] == "s2xh2");
    CHECK(r.doc["config"]["tol"].get<double>() == 1e-8);
    REQUIRE(r.doc["points"].size() == 5);
    for (const auto& p : r.doc["points"]) {
        CHECK(p["coords"].size() == 4);
        CHECK(p["residuals"].contains("quasi_kahler"));
        CHECK(p["residuals"].contains("lemma_eq5"));
        for (const auto& [k, v] : p["verdicts"].items()) {
            const std::string s = v.get<std::string>();
            CHECK((s == "yes" || s == "no" || s == "inconclusive"));
        }
    }
    CHECK(r.doc["verdict"]["kind"] == "product_of_surfaces");
}

TEST_CASE("text and JSON reports carry the same numbers") {
    for (const char* name : {"h4_constJ", "kodaira_thurston"}) {
        const Report r = analyze_report(gallery_entry(name).spec, RunConfig{});
        const std::string text = render(r, OutputFormat::text);
        const ojson back = ojson::parse(render(r, OutputFormat::json));
        std::vector<double> floats;
        collect_floats(back, floats);
        REQUIRE(!floats.empty());
        for (double v : floats) {
            INFO(format_double(v));
            CHECK(text.find(format_double(v)) != std::string::npos);
            CHECK(std::stod(format_double(v)) == v);
        }
    }
}

TEST_CASE("reports are reproducible") {
    const RunConfig cfg{.tol = {}, .format = OutputFormat::json, .points = std::nullopt};
    CHECK(render(gallery_run_all_report(cfg), OutputFormat::json) ==
          render(gallery_run_all_report(cfg), OutputFormat::json));
}

TEST_CASE("lemma equations are asserted only under their hypotheses") {
    const Report h4 = check_report(gallery_entry("h4_constJ").spec, "eq2", RunConfig{});
    CHECK(h4.exit_code == exit_ok);
    for (const auto& row : h4.doc["points"]) CHECK(row["asserted"] == false);

    const Report prod = check_report(gallery_entry("s2xh2").spec, "step1", RunConfig{});
    CHECK(prod.exit_code == exit_ok);
    for (const auto& row : prod.doc["points"]) {
        CHECK(row["asserted"] == true);
        CHECK(row["pass"] == true);
    }

    const Report eq6 = check_report(gallery_entry("conf_flat_generic").spec, "eq6", RunConfig{});
    for (const auto& row : eq6.doc["points"]) CHECK(row["asserted"] == true);
    CHECK(eq6.doc["max_residual"].get<double>() <= 1e-7);

    const Report b = check_report(gallery_entry("kodaira_thurston").spec, "bianchi2", RunConfig{});
    for (const auto& row : b.doc["points"]) CHECK(row["asserted"] == true);
    CHECK(b.exit_code == exit_ok);

    CHECK_THROWS_AS(check_report(gallery_entry("flat_c2").spec, "eq7", RunConfig{}), std::invalid_argument);
}

TEST_CASE("a tolerance tighter than the achievable residual is reported as a failure") {
    RunConfig cfg;
    cfg.tol.membership = 1e-30;
    const Report r = check_report(gallery_entry("h4_constJ").spec, "bianchi2", cfg);
    CHECK(r.exit_code == exit_inconsistent);
}

TEST_CASE("selftest report passes") {
    const Report r = selftest_report(RunConfig{});
    CHECK(r.exit_code == exit_ok);
    CHECK(r.doc["entries"].size() == gallery_names().size());
}

TEST_CASE("command line classify outputs") {
    const CliResult prod = run_cli("classify gallery:s2xh2 --format json");
    CHECK(prod.code == 0);
    const ojson pj = ojson::parse(prod.out);
    CHECK(pj["verdict"]["kind"] == "product_of_surfaces");
    CHECK(pj["verdict"]["c"].get<double>() == Catch::Approx(1.0).margin(1e-6));

    const CliResult sph = run_cli("classify gallery:s2xs2 --format json");
    CHECK(sph.code == 2);
    CHECK(ojson::parse(sph.out)["verdict"]["reasons"][0] == "conformal flatness fails");

    const CliResult eq5 = run_cli("check eq5 gallery:conf_flat_generic --format json");
    CHECK(eq5.code == 0);
    CHECK(ojson::parse(eq5.out)["max_residual"].get<double>() <= 1e-7);
}

TEST_CASE("command line manifest round trip") {
    const CliResult emitted = run_cli("gallery emit kodaira_thurston");
    REQUIRE(emitted.code == 0);
    const ManifoldSpec s = load_manifest(emitted.out);
    CHECK(emit_manifest(s) == emitted.out);
    CHECK(emitted.out == emit_manifest(gallery_entry("kodaira_thurston").spec));
}

TEST_CASE("command line rejects bad input") {
    CHECK(run_cli("classify gallery:nope").code == 1);
    CHECK(run_cli("classify gallery:s2xh2 --param c").code == 1);
    CHECK(run_cli("classify gallery:s2xh2 --param c=abc").code == 1);
    CHECK(run_cli("classify gallery:s2xh2 --tol 0.5 --nonmember 0.1").code == 1);
    CHECK(run_cli("check eq9 gallery:s2xh2").code != 0);
}

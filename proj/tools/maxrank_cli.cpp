// maxrank command line front end. Talks to the library only through the C API.
#include "maxrank/maxrank.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct Flags {
    std::string op, boundary, mode, out, config, check;
    int n = 0, nx = 0, nt = 0, seeds = 0, continuation = -1, k = -1, max_iter = 0;
    long long seed = -1;
    std::vector<double> eps;
    double tol = 0.0, verify_tol = 0.0;
    bool no_fields = false;
};

void add_common(CLI::App* app, Flags& f, bool pde, bool lab)
{
    app->add_option("--out", f.out, "output directory");
    app->add_option("--config", f.config, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
    app->add_option("--n", f.n, "space dimension (1..3)");
    if (pde) {
        app->add_option("--operator", f.op, "ma | donaldson");
        app->add_option("--Nx", f.nx, "points per periodic space axis");
        app->add_option("--Nt", f.nt, "time cells on [0,1]");
        app->add_option("--epsilon", f.eps, "right-hand side value(s)")->delimiter(',');
        app->add_option("--boundary", f.boundary, "flat:c0,c1 | cosine:a0,a1,k1[,k2,k3] | mix:c0,c1;S/A/P/k...");
        app->add_option("--tol", f.tol, "Newton residual tolerance (max-norm)");
        app->add_option("--max-iter", f.max_iter, "Newton iteration cap");
        app->add_option("--continuation", f.continuation, "force the s-homotopy with N uniform steps (donaldson)");
        app->add_option("--verify-tol", f.verify_tol, "theorem tolerance (default 5 h^2)");
        app->add_option("--K", f.k, "bad-direction count for the key-estimate probe (default n)");
        app->add_flag("--no-fields", f.no_fields, "skip the .fld solution dumps");
    }
    if (lab) {
        app->add_option("--check", f.check, "all | lemma1 | lemma2 | lemma3 | kn | qforms | qnonneg | qstar | v | g3probe");
        app->add_option("--seeds", f.seeds, "number of seeds");
        app->add_option("--seed", f.seed, "first seed");
        app->add_option("--mode", f.mode, "exact | scaled:DELTA");
    }
}

json build_config(const std::string& command, const Flags& f)
{
    json c = json::object();
    if (!f.config.empty()) {
        std::ifstream is(f.config);
        std::stringstream ss;
        ss << is.rdbuf();
        c = json::parse(ss.str());
        if (!c.is_object()) throw std::runtime_error("config file must hold a JSON object");
        c["config_file"] = f.config;
    }
    c["command"] = command;
    if (!f.op.empty()) c["operator"] = f.op;
    if (f.n) c["n"] = f.n;
    if (f.nx) c["Nx"] = f.nx;
    if (f.nt) c["Nt"] = f.nt;
    if (!f.eps.empty()) c["epsilon"] = f.eps;
    if (!f.boundary.empty()) c["boundary"] = f.boundary;
    if (f.tol != 0.0) c["tol"] = f.tol;
    if (f.max_iter) c["max_iter"] = f.max_iter;
    if (f.continuation >= 0) c["continuation"] = f.continuation;
    if (f.verify_tol != 0.0) c["verify_tol"] = f.verify_tol;
    if (f.k >= 0) c["K"] = f.k;
    if (f.no_fields) c["dump_fields"] = false;
    if (!f.check.empty()) c["check"] = f.check;
    if (f.seeds) c["seeds"] = f.seeds;
    if (f.seed >= 0) c["seed"] = f.seed;
    if (!f.mode.empty()) c["mode"] = f.mode;
    if (!f.out.empty()) c["out"] = f.out;
    return c;
}

void print_run(const json& r)
{
    const json& s = r["solve"];
    std::printf("eps=%-10g converged=%d iterations=%d", r.value("epsilon", 0.0), s.value("converged", false) ? 1 : 0,
                s.value("iterations", 0));
    if (s.contains("residuals") && !s["residuals"].empty())
        std::printf(" residual=%.3e", s["residuals"].back().get<double>());
    if (r.contains("theorems")) {
        const json& t = r["theorems"];
        std::printf(" mu0=%.6g lambda=%.6g lower=%d const_rank=%d strict=%d", t.value("mu0", 0.0),
                    t.value("lambda_boundary", 0.0), t["lower_bound"].value("pass", false) ? 1 : 0,
                    t["constant_rank"].value("pass", false) ? 1 : 0, t["strict"].value("pass", false) ? 1 : 0);
    }
    if (r.contains("probe") && !r["probe"].value("insufficient", true))
        std::printf(" sup_ratio=%.4g", r["probe"].value("sup_ratio", 0.0));
    std::printf("\n");
}

void print_summary(const std::string& command, const json& report)
{
    if (command == "report") {
        std::cout << report.value("results", json::object()).dump(2) << "\n";
        return;
    }
    const json& res = report.value("results", json::object());
    if (res.contains("runs"))
        for (const auto& r : res["runs"]) print_run(r);
    if (res.contains("entries"))
        for (const auto& r : res["entries"]) print_run(r);
    if (res.contains("summary"))
        for (auto it = res["summary"].begin(); it != res["summary"].end(); ++it)
            std::printf("%-24s count=%-5zu max=%.3e violations=%zu%s\n", it.key().c_str(),
                        it.value().value("count", std::size_t{0}), it.value().value("max_discrepancy", 0.0),
                        it.value().value("violations", std::size_t{0}),
                        it.value().value("asserted", false) ? "" : " (reported)");
    if (res.contains("g3probe")) std::cout << "g3probe " << res["g3probe"].dump() << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"maxrank: solver and checker for degenerate Monge-Ampere type equations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mxr_version()));

    Flags f;
    CLI::App* solve = app.add_subcommand("solve", "solve the Dirichlet problem for each epsilon");
    CLI::App* verify = app.add_subcommand("verify", "solve, then check the rank statements and run the probe");
    CLI::App* sweep = app.add_subcommand("sweep", "warm-started solves along a decreasing epsilon ladder");
    CLI::App* identity = app.add_subcommand("identity", "pointwise identity and sign checks on random jets");
    CLI::App* report = app.add_subcommand("report", "summarise an existing report.json");
    for (CLI::App* c : {solve, verify, sweep}) add_common(c, f, true, false);
    add_common(identity, f, false, true);
    report->add_option("--out", f.out, "output directory holding report.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    json config;
    try {
        config = build_config(command, f);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "maxrank: config: %s\n", e.what());
        return 2;
    }

    char* text = nullptr;
    int exit_code = 1;
    if (mxr_run(config.dump().c_str(), &text, &exit_code) != MXR_OK) {
        std::fprintf(stderr, "maxrank: %s\n", mxr_last_error_message());
        return 1;
    }
    json rep = json::parse(text, nullptr, false);
    mxr_string_free(text);
    if (rep.is_discarded()) {
        std::fprintf(stderr, "maxrank: library returned an unreadable report\n");
        return 1;
    }
    print_summary(command, rep);
    if (rep.contains("error"))
        std::fprintf(stderr, "maxrank: %s: %s\n", rep["error"].value("category", "error").c_str(),
                     rep["error"].value("message", "").c_str());
    return exit_code;
}

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "maxrank/error.hpp"
#include "maxrank/run.hpp"
#include "maxrank/solver.hpp"
#include "maxrank/verifier.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace maxrank;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Line {
    int id;
    bool pass;
    std::string text;
};

std::vector<Line> lines;
std::vector<std::pair<std::string, SolveReport>> newton_runs;  // every solve made below, for the Newton-quality criterion

void report(int id, bool pass, const std::string& text)
{
    lines.push_back({id, pass, text});
    std::printf("criterion %d %s: %s\n", id, pass ? "PASS" : "FAIL", text.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class... A>
std::string fmt(const char* f, A... v)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, v...);
    return buf;
}

Problem problem_from(OperatorKind kind, int n, int nx, int nt, double eps, const std::string& boundary)
{
    const GridSpec g = build_grid(n, nx, nt);
    std::vector<double> u0, u1;
    parse_boundary(boundary, n).fill(g, u0, u1);
    return make_problem(kind, g, eps, std::move(u0), std::move(u1));
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ------------------------------------------------------------ criterion 1

void trivial_solution()
{
    bool ok = true;
    std::string detail;
    double worst_time = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const int nx = n == 3 ? 16 : 32;
        const auto t0 = std::chrono::steady_clock::now();
        const Problem p = problem_from(OperatorKind::Donaldson, n, nx, nx, 2.0 * n, "flat:1,2");
        const SolveResult r = newton_solve(p, {}, initial_guess(p));
        const double secs = seconds_since(t0);
        worst_time = std::max(worst_time, secs);
        double err = 0.0;
        for_each_point(p.spec, 0, p.spec.nt, [&](const GridPoint& q) {
            const double t = q.k * p.spec.ht;
            err = std::max(err, std::abs(r.u.at(q) - (1.0 + t * t)));
        });
        const double res = r.report.residuals.back();
        newton_runs.emplace_back("trivial n=" + std::to_string(n), r.report);
        ok = ok && r.report.converged && res < 1e-12 && r.report.iterations <= 1 && err < 1e-12 && secs < 1.0;
        detail += " n=" + std::to_string(n) + ": iters=" + std::to_string(r.report.iterations) +
                  fmt(" residual=%.1e", res) + fmt(" |u-(1+t^2)|=%.1e", err) + fmt(" %.2fs", secs) + ";";
    }
    report(1, ok, "Donaldson flat (1,2), eps = 2n, exact trivial solution;" + detail);
}

// ------------------------------------------------------------ criterion 2

std::vector<double> sup_ratios, sup_ratios_normalized;

void ma_lower_bound()
{
    const std::string boundary = "cosine:0.012,0.012,1";
    const double guarantee = parse_boundary(boundary, 2).guarantee();
    bool ok = guarantee >= 0.5;
    std::string detail = fmt(" analytic lambda >= %.4f;", guarantee);
    std::optional<ScalarField> warm;
    for (double eps : {1.0, 0.1, 0.01}) {
        const auto t0 = std::chrono::steady_clock::now();
        const Problem p = problem_from(OperatorKind::MongeAmpere, 2, 32, 32, eps, boundary);
        const SolveResult r = newton_solve(p, {}, warm ? *warm : initial_guess(p));
        const double secs = seconds_since(t0);
        newton_runs.emplace_back(fmt("MA n=2 eps=%g", eps), r.report);
        if (!r.report.converged) {
            ok = false;
            detail += fmt(" eps=%g: no convergence;", eps);
            continue;
        }
        const RankReport rank = check_theorems(r.u, p);
        const ProbeReport probe = key_estimate_probe(r.u, p, 2);
        sup_ratios.push_back(probe.sup_ratio);
        sup_ratios_normalized.push_back(probe.sup_normalized_ratio);
        warm = r.u;
        ok = ok && rank.lower_bound_pass && secs < 60.0;
        detail += fmt(" eps=%g:", eps) + fmt(" mu0=%.5f", rank.mu0) + fmt(" lambda=%.5f", rank.lambda_boundary) +
                  fmt(" tol=%.2e", rank.tol) + " iters=" + std::to_string(r.report.iterations) + fmt(" %.1fs;", secs);
    }
    report(2, ok, "MA n=2 32^3, mu0 >= lambda - 5h^2 for eps in {1, 0.1, 0.01};" + detail);
}

// ------------------------------------------------------------ criterion 3

void donaldson_lower_bound()
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (double eps : {1.0, 0.1, 0.01}) {
        const Problem p = problem_from(OperatorKind::Donaldson, 2, 32, 32, eps, "cosine:0.012,0.012,1");
        try {
            const ContinuationResult c = continuation_s(p, uniform_schedule(10), {});
            for (const auto& s : c.steps) newton_runs.emplace_back(fmt("Donaldson n=2 eps=%g s=%g", eps, s.s), s.report);
            const RankReport rank = check_theorems(c.u, p);
            ok = ok && rank.lower_bound_pass;
            detail += fmt(" eps=%g:", eps) + fmt(" mu0=%.5f", rank.mu0) + fmt(" lambda=%.5f", rank.lambda_boundary) +
                      " steps=" + std::to_string(c.steps.size() - 1) + ";";
        } catch (const Error& e) {
            ok = false;
            detail += fmt(" eps=%g: ", eps) + e.what() + ";";
        }
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 90.0;
    report(3, ok, "Donaldson n=2 32^3 via 10-step continuation, mu0 >= lambda - 5h^2;" + detail +
                      fmt(" total %.1fs", secs));
}

// ------------------------------------------------------------ criterion 4

void donaldson_rank_n3()
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::string boundary = "mix:0,1;0/0.008/0/1/0/0;1/0.008/0.25/0/1/0;0/0.004/0.1/0/0/1";
    bool ok = true;
    std::string detail;
    for (double eps : {1.0, 0.1, 0.01}) {
        const Problem p = problem_from(OperatorKind::Donaldson, 3, 16, 16, eps, boundary);
        SolveResult r = newton_solve(p, {}, initial_guess(p));
        newton_runs.emplace_back(fmt("Donaldson n=3 eps=%g", eps), r.report);
        if (!r.report.converged) {
            ContinuationResult c = continuation_s(p, uniform_schedule(10), {});
            for (const auto& s : c.steps) newton_runs.emplace_back(fmt("Donaldson n=3 eps=%g s=%g", eps, s.s), s.report);
            r.u = std::move(c.u);
        }
        const RankReport rank = check_theorems(r.u, p);
        ok = ok && rank.constant_rank_pass && rank.strict_pass;
        detail += fmt(" eps=%g:", eps) + " bins=" + std::to_string(rank.rank_histogram.size()) +
                  " rank=" + std::to_string(rank.rank_histogram.begin()->first) + fmt(" mu0=%.5f;", rank.mu0);
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 120.0;
    report(4, ok, "Donaldson n=3 16^3x16, single-bin rank histogram and mu0 > 0;" + detail + fmt(" total %.1fs", secs));
}

// ------------------------------------------------------- criteria 5, 6, 10

json identity_run(const std::string& check, int n, int seeds, const std::string& mode, const fs::path& out)
{
    RunConfig c;
    c.command = Command::Identity;
    c.check = check;
    c.n = n;
    c.seeds = seeds;
    c.seed = 0;
    parse_mode(mode, c.mode, c.delta);
    c.out_dir = out.string();
    const RunOutcome r = run(c);
    json j = json::parse(r.report_json);
    j["exit"] = r.exit_code;
    return j;
}

const fs::path root = fs::current_path() / "acceptance_out";

void identity_section3()
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    const std::vector<std::pair<std::string, std::string>> checks{
        {"lemma1", "lemma1/n2/G1"}, {"lemma2", "lemma2/n2/G1"}, {"lemma3", "lemma3/n2/G1"}, {"kn", "kn/n2/G0"}};
    for (const auto& [check, key] : checks) {
        const json j = identity_run(check, 2, 1000, "exact", root / "run1" / check);
        const json& s = j["results"]["summary"][key];
        const double m = s["max_discrepancy"];
        ok = ok && j["exit"] == 0 && s["count"] == 1000 && m < 1e-10;
        detail += " " + check + fmt(" max=%.1e", m);
    }
    detail += "; slopes";
    const std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    for (const auto& [check, key] : checks) {
        std::vector<double> means;
        for (double d : deltas) {
            const json j = identity_run(check, 2, 200, "scaled:" + fmt("%g", d), root / "ladder" / check);
            means.push_back(j["results"]["summary"][key]["mean_discrepancy"].get<double>());
        }
        const double slope = loglog_slope(deltas, means);
        ok = ok && slope >= 0.8 && slope <= 1.2;
        detail += " " + check + fmt("=%.3f", slope);
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 30.0;
    report(5, ok, "MA identities, 1000 exact seeds at n=2, delta-ladder slopes;" + detail + fmt("; %.1fs", secs));
}

void identity_section4(const fs::path& dir, bool print)
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    const json qf = identity_run("qforms", 3, 500, "exact", dir / "qforms");
    const double agree = qf["results"]["summary"]["qforms/n3/G2"]["max_discrepancy"];
    ok = ok && qf["exit"] == 0 && agree < 1e-9;
    detail += fmt(" qforms max pairwise=%.1e;", agree);

    const json nn = identity_run("qnonneg", 3, 10000, "exact", dir / "qnonneg");
    long violations = 0, count = 0;
    for (int g = 0; g <= 2; ++g) {
        const json& s = nn["results"]["summary"]["qnonneg/n3/G" + std::to_string(g)];
        violations += s["violations"].get<long>();
        count += s["count"].get<long>();
    }
    ok = ok && count == 30000 && violations == 0;
    detail += " qnonneg " + std::to_string(violations) + " violations/" + std::to_string(count) + ";";

    const json qs = identity_run("qstar", 3, 1000, "exact", dir / "qstar");
    long qv = 0, qc = 0;
    for (auto it = qs["results"]["summary"].begin(); it != qs["results"]["summary"].end(); ++it) {
        qv += it.value()["violations"].get<long>();
        qc += it.value()["count"].get<long>();
    }
    ok = ok && qc == 2000 && qv == 0;
    detail += " qstar " + std::to_string(qv) + " violations/" + std::to_string(qc);
    const double secs = seconds_since(t0);
    ok = ok && secs < 60.0;
    if (print) report(6, ok, "Q forms and signs, n=3;" + detail + fmt("; %.1fs", secs));
}

void determinism()
{
    // criterion 5 and 6 runs repeated into a second tree
    for (const std::string check : {"lemma1", "lemma2", "lemma3", "kn"})
        identity_run(check, 2, 1000, "exact", root / "run2" / check);
    identity_section4(root / "run2", false);
    std::size_t files = 0;
    bool same = true;
    for (const std::string sub : {"lemma1", "lemma2", "lemma3", "kn", "qforms", "qnonneg", "qstar"}) {
        const fs::path a = root / "run1" / sub / "identity.csv";
        const fs::path b = root / "run2" / sub / "identity.csv";
        if (!fs::exists(a) || !fs::exists(b)) {
            same = false;
            continue;
        }
        same = same && slurp(a) == slurp(b);
        ++files;
    }
    report(10, same && files == 7, std::to_string(files) + " identity CSVs from two runs compared byte for byte");
}

// ------------------------------------------------------------ criterion 7

void derivative_oracles()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double min_order = 1e9;
    int measured = 0, exact = 0, bad = 0;
    auto order = [&](double e1, double e2, double scale) {
        // e1 at h, e2 at h/2; an error already at roundoff means the difference is exact
        if (e1 < 1e-10 * scale) {
            ++exact;
            return;
        }
        const double o = std::log2(e1 / std::max(e2, 1e-300));
        min_order = std::min(min_order, o);
        ++measured;
        if (o < 1.9) ++bad;
    };
    for (OperatorKind kind : {OperatorKind::MongeAmpere, OperatorKind::Donaldson})
        for (int rep = 0; rep < 200; ++rep) {
            const int n = 1 + rep % 3, d = n + 1;
            Mat a(d, d), e(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    a(i, j) = 0.4 * u(rng);
                    e(i, j) = u(rng);
                }
            Mat m = a * a.transpose() + 0.3 * Mat::Identity(d, d);  // M in the cone
            const Mat g = grad_matrix(kind, m);
            const Tensor4 t = hess_matrix(kind, m);
            const double f0 = f_matrix(kind, m);
            const double dir1 = (g.array() * e.array()).sum();
            const double dir2 = t.contract(e, e);
            Mat te = Mat::Zero(d, d);
            for (int c = 0; c < d; ++c)
                for (int f = 0; f < d; ++f)
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) te(c, f) += t(i, j, c, f) * e(i, j);
            double eg[2], eh[2], et[2];
            for (int k = 0; k < 2; ++k) {
                const double h = k == 0 ? 0.02 : 0.01;
                const double fp = f_matrix(kind, m + h * e), fm = f_matrix(kind, m - h * e);
                eg[k] = std::abs((fp - fm) / (2 * h) - dir1);
                eh[k] = std::abs((fp - 2 * f0 + fm) / (h * h) - dir2);
                const Mat gd = (grad_matrix(kind, m + h * e) - grad_matrix(kind, m - h * e)) / (2 * h);
                et[k] = (gd - te).cwiseAbs().maxCoeff();
            }
            order(eg[0], eg[1], 1.0 + std::abs(dir1));
            order(eh[0], eh[1], 1.0 + std::abs(dir2));
            order(et[0], et[1], 1.0 + te.cwiseAbs().maxCoeff());
        }
    const double secs = seconds_since(t0);
    const bool ok = bad == 0 && measured > 0 && secs < 10.0;
    report(7, ok, "grad_F/hess_F vs central differences on 200 cone matrices per operator; " +
                      std::to_string(measured) + " orders measured, min " + fmt("%.3f", min_order) + ", " +
                      std::to_string(exact) + " exact to roundoff (operator polynomial of degree <= 2 along the line" +
                      "), " + fmt("%.2fs", secs));
}

// ------------------------------------------------------------ criterion 8

void newton_quality()
{
    // the literal window r_{k+1} <= 10 r_k^2 cannot hold once 10 r_k^2 drops below
    // the roundoff floor of the residual evaluation; those pairs only need r_{k+1} <= floor
    const double floor = 1e-12;
    int checked = 0, literal_fail = 0, fail = 0, margin_fail = 0;
    std::string worst;
    for (const auto& [label, r] : newton_runs) {
        if (!r.converged) continue;
        for (double m : r.cone_margins)
            if (!(m > 0.0)) ++margin_fail;
        const auto& res = r.residuals;
        if (res.size() < 2) continue;
        const double rk = res[res.size() - 2], rk1 = res.back();
        if (!(rk < 1e-4)) continue;
        ++checked;
        if (!(rk1 <= 10 * rk * rk)) ++literal_fail;
        if (!(rk1 <= std::max(10 * rk * rk, floor))) {
            ++fail;
            worst += "; " + label + fmt(": r_k=%.3e r_k+1=%.3e ratio r_k+1/r_k^2=%.1f", rk, rk1, rk1 / (rk * rk));
        }
    }
    report(8, fail == 0 && margin_fail == 0,
           std::to_string(newton_runs.size()) + " solves, " + std::to_string(checked) +
               " final pairs in the window, " + std::to_string(fail) + " above max(10 r_k^2, 1e-12) (" +
               std::to_string(literal_fail) + " above 10 r_k^2 alone), " + std::to_string(margin_fail) +
               " iterates with non-positive cone margin" + worst);
}

// ------------------------------------------------------------ criterion 9

void probe_stability()
{
    if (sup_ratios.size() < 2) {
        report(9, false, "criterion 2 ladder incomplete");
        return;
    }
    auto variation = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *lo > 0 ? *hi / *lo - 1.0 : INFINITY;
    };
    std::string vals;
    for (double s : sup_ratios) vals += fmt(" %.4g", s);
    std::string norm;
    for (double s : sup_ratios_normalized) norm += fmt(" %.4g", s);
    const double v = variation(sup_ratios);
    report(9, v < 0.5,
           "sup F^ab phi_ab/(phi+|grad phi|) over the 1% smallest phi, eps = 1, 0.1, 0.01:" + vals +
               fmt(", variation max/min-1 = %.3f", v) + "; with F^ab scaled to unit trace:" + norm +
               fmt(" (variation %.3f)", variation(sup_ratios_normalized)));
}

} // namespace

int main()
{
    fs::remove_all(root);
    trivial_solution();
    ma_lower_bound();
    donaldson_lower_bound();
    donaldson_rank_n3();
    identity_section3();
    identity_section4(root / "run1", true);
    derivative_oracles();
    newton_quality();
    probe_stability();
    determinism();

    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
    int failed = 0;
    std::printf("\nsummary\n");
    for (const Line& l : lines) {
        std::printf("  criterion %d: %s\n", l.id, l.pass ? "PASS" : "FAIL");
        failed += !l.pass;
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(lines.size()) - failed, lines.size());
    return failed ? 1 : 0;
}

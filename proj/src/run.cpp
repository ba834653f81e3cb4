#include "maxrank/run.hpp"

#include "maxrank/error.hpp"
#include "maxrank/verifier.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace maxrank {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_real(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        fail(ErrorCode::Config, "cannot parse " + what + " from '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) fail(ErrorCode::Config, "cannot parse " + what + " from '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const std::string& what)
{
    const double v = parse_real(s, what);
    if (v != std::floor(v) || std::abs(v) > 1e6) fail(ErrorCode::Config, what + " must be an integer, got '" + s + "'");
    return static_cast<int>(v);
}

std::string hex(const unsigned char* d, std::size_t n)
{
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(digits[d[i] >> 4]);
        s.push_back(digits[d[i] & 15]);
    }
    return s;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string git_blob_sha1(const std::string& bytes)
{
    const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) fail(ErrorCode::Io, "SHA-1 digest failed");
    return hex(digest, len);
}

// ---------------------------------------------------------------- boundary

double BoundaryGen::guarantee() const
{
    double worst = 1.0;
    for (int slice = 0; slice < 2; ++slice) {
        double drop = 0.0;
        for (const auto& m : modes) {
            if (m.slice != slice) continue;
            const double k2 = m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2];
            drop += std::abs(m.amp) * 4.0 * std::numbers::pi * std::numbers::pi * k2;
        }
        worst = std::min(worst, 1.0 - drop);
    }
    return worst;
}

void BoundaryGen::fill(const GridSpec& spec, std::vector<double>& u0, std::vector<double>& u1) const
{
    u0.assign(spec.space_points(), c0);
    u1.assign(spec.space_points(), c1);
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    for (std::size_t s = 0; s < spec.space_points(); ++s) {
        const GridPoint p = point_from_flat(spec, s * slices);
        const Vec x = coordinates(spec, p);
        for (const auto& m : modes) {
            double phase = m.phase;
            for (int a = 0; a < spec.n; ++a) phase += m.k[static_cast<std::size_t>(a)] * x(a);
            const double v = m.amp * std::cos(2.0 * std::numbers::pi * phase);
            (m.slice == 0 ? u0 : u1)[s] += v;
        }
    }
}

BoundaryGen parse_boundary(const std::string& text, int n)
{
    BoundaryGen g;
    g.text = text;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);

    auto wave = [&](const std::vector<std::string>& ks, std::size_t from, const std::string& what) {
        std::array<int, 3> k{};
        if (ks.size() <= from) fail(ErrorCode::Config, what + " needs at least one wave number");
        if (ks.size() - from > static_cast<std::size_t>(n))
            fail(ErrorCode::Config, what + " has more wave numbers than space dimensions");
        for (std::size_t i = from; i < ks.size(); ++i) k[i - from] = parse_int(ks[i], "wave number");
        return k;
    };

    if (name == "flat") {
        const auto v = split(args, ',');
        if (v.size() != 2) fail(ErrorCode::Config, "flat boundary expects flat:c0,c1");
        g.c0 = parse_real(v[0], "flat c0");
        g.c1 = parse_real(v[1], "flat c1");
    } else if (name == "cosine") {
        const auto v = split(args, ',');
        if (v.size() < 3) fail(ErrorCode::Config, "cosine boundary expects cosine:a0,a1,k1[,k2,k3]");
        const auto k = wave(v, 2, "cosine boundary");
        g.c0 = 0.0;
        g.c1 = 1.0;
        g.modes.push_back({0, parse_real(v[0], "cosine a0"), 0.0, k});
        g.modes.push_back({1, parse_real(v[1], "cosine a1"), -0.25, k});
    } else if (name == "mix") {
        const auto parts = split(args, ';');
        if (parts.empty()) fail(ErrorCode::Config, "mix boundary expects mix:c0,c1;S/A/P/k1...");
        const auto base = split(parts[0], ',');
        if (base.size() != 2) fail(ErrorCode::Config, "mix boundary base must be c0,c1");
        g.c0 = parse_real(base[0], "mix c0");
        g.c1 = parse_real(base[1], "mix c1");
        for (std::size_t i = 1; i < parts.size(); ++i) {
            const auto f = split(parts[i], '/');
            if (f.size() < 4) fail(ErrorCode::Config, "mix mode expects S/A/P/k1[/k2/k3]");
            BoundaryGen::Mode m;
            m.slice = parse_int(f[0], "mix slice");
            if (m.slice != 0 && m.slice != 1) fail(ErrorCode::Config, "mix slice must be 0 or 1");
            m.amp = parse_real(f[1], "mix amplitude");
            m.phase = parse_real(f[2], "mix phase");
            m.k = wave(f, 3, "mix mode");
            g.modes.push_back(m);
        }
    } else {
        fail(ErrorCode::Config, "unknown boundary generator '" + name + "' (flat, cosine, mix)");
    }
    return g;
}

// ------------------------------------------------------------------ config

std::string to_string(Command c)
{
    switch (c) {
    case Command::Solve: return "solve";
    case Command::Verify: return "verify";
    case Command::Sweep: return "sweep";
    case Command::Identity: return "identity";
    case Command::Report: return "report";
    }
    return "solve";
}

Command command_from_string(const std::string& s)
{
    for (Command c : {Command::Solve, Command::Verify, Command::Sweep, Command::Identity, Command::Report})
        if (to_string(c) == s) return c;
    fail(ErrorCode::Config, "unknown command '" + s + "'");
}

void parse_mode(const std::string& text, SampleMode& mode, double& delta)
{
    if (text == "exact") {
        mode = SampleMode::Exact;
        delta = 0.0;
        return;
    }
    if (text.rfind("scaled:", 0) == 0) {
        mode = SampleMode::Scaled;
        delta = parse_real(text.substr(7), "scaled-mode delta");
        return;
    }
    fail(ErrorCode::Config, "mode must be exact or scaled:DELTA, got '" + text + "'");
}

namespace {

const std::set<std::string> kChecks{"all", "lemma1", "lemma2", "lemma3", "kn", "qforms", "qnonneg", "qstar", "v",
                                    "g3probe"};

std::string mode_text(SampleMode m, double delta)
{
    return m == SampleMode::Exact ? "exact" : "scaled:" + fmt(delta);
}

} // namespace

void RunConfig::validate() const
{
    if (n < 1 || n > 3) fail(ErrorCode::Config, "n must lie in [1,3], got " + std::to_string(n));
    solver.validate();
    if (seeds < 1) fail(ErrorCode::Config, "seeds must be positive");
    if (!kChecks.count(check)) fail(ErrorCode::Config, "unknown identity check '" + check + "'");
    if (mode == SampleMode::Scaled && !(delta > 0.0 && delta <= 0.1))
        fail(ErrorCode::Config, "scaled-mode delta must lie in (0, 0.1]");
    if (command == Command::Identity || command == Command::Report) return;

    build_grid(n, nx, nt);
    if (eps.empty()) fail(ErrorCode::Config, "epsilon list is empty");
    for (double e : eps)
        if (!(e > 0.0) || !std::isfinite(e)) fail(ErrorCode::Config, "epsilon values must be positive");
    if (command == Command::Sweep)
        for (std::size_t i = 1; i < eps.size(); ++i)
            if (!(eps[i] < eps[i - 1])) fail(ErrorCode::Config, "sweep epsilon list must decrease");
    if (continuation < 0) fail(ErrorCode::Config, "continuation steps must be non-negative");
    if (continuation > 0 && kind != OperatorKind::Donaldson)
        fail(ErrorCode::Config, "continuation is defined for the Donaldson operator only");
    if (probe_k < 0 || probe_k > n) fail(ErrorCode::Config, "K must lie in [1, n] (0 selects n)");
    if (!(verify.rank_rel_threshold > 0.0)) fail(ErrorCode::Config, "rank threshold must be positive");
    const BoundaryGen g = parse_boundary(boundary, n);
    if (!(g.guarantee() > 0.0))
        fail(ErrorCode::Config, "boundary generator guarantee 1 - sum|a|(2 pi k)^2 = " + fmt(g.guarantee()) +
                                    " is not positive");
}

RunConfig config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::Config, "config must be a JSON object");

    RunConfig c;
    static const std::set<std::string> known{"command", "operator", "n", "Nx", "Nt", "epsilon", "boundary", "tol",
                                             "max_iter", "backtrack", "min_step", "cone_safeguard", "verify_tol",
                                             "rank_threshold", "continuation", "K", "check", "seeds", "seed",
                                             "mode", "out", "dump_fields", "config_file"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) fail(ErrorCode::Config, "unknown config key '" + it.key() + "'");

    try {
        if (j.contains("command")) c.command = command_from_string(j["command"].get<std::string>());
        if (j.contains("operator")) c.kind = operator_from_string(j["operator"].get<std::string>());
        if (j.contains("n")) c.n = j["n"].get<int>();
        if (j.contains("Nx")) c.nx = j["Nx"].get<int>();
        if (j.contains("Nt")) c.nt = j["Nt"].get<int>();
        if (j.contains("epsilon")) {
            const json& e = j["epsilon"];
            c.eps.clear();
            if (e.is_array())
                for (const auto& v : e) c.eps.push_back(v.get<double>());
            else if (e.is_string())
                for (const auto& v : split(e.get<std::string>(), ',')) c.eps.push_back(parse_real(v, "epsilon"));
            else
                c.eps.push_back(e.get<double>());
        }
        if (j.contains("boundary")) c.boundary = j["boundary"].get<std::string>();
        if (j.contains("tol")) c.solver.tol = j["tol"].get<double>();
        if (j.contains("max_iter")) c.solver.max_iter = j["max_iter"].get<int>();
        if (j.contains("backtrack")) c.solver.backtrack = j["backtrack"].get<double>();
        if (j.contains("min_step")) c.solver.min_step = j["min_step"].get<double>();
        if (j.contains("cone_safeguard")) c.solver.cone_safeguard = j["cone_safeguard"].get<bool>();
        if (j.contains("verify_tol")) c.verify.tol = j["verify_tol"].get<double>();
        if (j.contains("rank_threshold")) c.verify.rank_rel_threshold = j["rank_threshold"].get<double>();
        if (j.contains("continuation")) c.continuation = j["continuation"].get<int>();
        if (j.contains("K")) c.probe_k = j["K"].get<int>();
        if (j.contains("check")) c.check = j["check"].get<std::string>();
        if (j.contains("seeds")) c.seeds = j["seeds"].get<int>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("mode")) parse_mode(j["mode"].get<std::string>(), c.mode, c.delta);
        if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
        if (j.contains("dump_fields")) c.dump_fields = j["dump_fields"].get<bool>();
        if (j.contains("config_file")) c.config_file = j["config_file"].get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, std::string("config value has the wrong type: ") + e.what());
    }
    return c;
}

namespace {

json config_json(const RunConfig& c)
{
    json j;
    j["command"] = to_string(c.command);
    j["operator"] = to_string(c.kind);
    j["n"] = c.n;
    j["Nx"] = c.nx;
    j["Nt"] = c.nt;
    j["epsilon"] = c.eps;
    j["boundary"] = c.boundary;
    j["tol"] = c.solver.tol;
    j["max_iter"] = c.solver.max_iter;
    j["backtrack"] = c.solver.backtrack;
    j["min_step"] = c.solver.min_step;
    j["cone_safeguard"] = c.solver.cone_safeguard;
    j["verify_tol"] = c.verify.tol;
    j["rank_threshold"] = c.verify.rank_rel_threshold;
    j["continuation"] = c.continuation;
    j["K"] = c.probe_k;
    j["check"] = c.check;
    j["seeds"] = c.seeds;
    j["seed"] = c.seed;
    j["mode"] = mode_text(c.mode, c.delta);
    j["out"] = c.out_dir;
    j["dump_fields"] = c.dump_fields;
    if (!c.config_file.empty()) j["config_file"] = c.config_file;
    return j;
}

} // namespace

std::string config_to_json(const RunConfig& c) { return config_json(c).dump(2); }

// ----------------------------------------------------------------- reports

namespace {

json point_json(const GridSpec& spec, const GridPoint& p)
{
    json j;
    std::vector<int> i(p.i.begin(), p.i.begin() + spec.n);
    j["i"] = i;
    j["k"] = p.k;
    return j;
}

json solve_json(const SolveReport& r)
{
    json j;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["residuals"] = r.residuals;
    j["cone_margins"] = r.cone_margins;
    j["steps"] = r.steps;
    j["cone_margin"] = r.cone_margin;
    if (!r.message.empty()) j["message"] = r.message;
    return j;
}

json rank_json(const GridSpec& spec, const RankReport& r)
{
    json j;
    j["mu0"] = r.mu0;
    j["argmin"] = point_json(spec, r.argmin);
    j["lambda_boundary"] = r.lambda_boundary;
    j["margin"] = r.margin;
    j["tol"] = r.tol;
    json h = json::object();
    for (const auto& [rank, count] : r.rank_histogram) h[std::to_string(rank)] = count;
    j["rank_histogram"] = h;
    j["interior_points"] = r.interior_points;
    j["lower_bound"] = {{"pass", r.lower_bound_pass}, {"applies", r.lower_bound_applies}};
    j["constant_rank"] = {{"pass", r.constant_rank_pass}, {"applies", r.constant_rank_applies}};
    j["strict"] = {{"pass", r.strict_pass}, {"applies", r.strict_applies}};
    j["all_applicable_pass"] = r.all_applicable_pass();
    return j;
}

json probe_json(const GridSpec& spec, const ProbeReport& r)
{
    json j;
    j["K"] = r.bad_count;
    j["mu0"] = r.mu0;
    j["floor"] = r.floor;
    j["probe_points"] = r.probe_points;
    j["sup_ratio"] = r.sup_ratio;
    j["sup_normalized_ratio"] = r.sup_normalized_ratio;
    j["global_sup_ratio"] = r.global_sup_ratio;
    j["insufficient"] = r.insufficient;
    json s = json::array();
    for (const auto& p : r.samples)
        s.push_back({{"point", point_json(spec, p.point)},
                     {"phi", p.phi},
                     {"grad_norm", p.grad_norm},
                     {"linearized", p.linearized},
                     {"ratio", p.ratio},
                     {"trace_f", p.trace_f}});
    j["samples"] = s;
    return j;
}

struct Artifacts {
    std::filesystem::path dir;
    std::map<std::string, std::string> hashes;

    void write(const std::string& name, const std::string& bytes)
    {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) fail(ErrorCode::Io, "cannot write " + (dir / name).string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) fail(ErrorCode::Io, "write failed for " + (dir / name).string());
        hashes[name] = git_blob_sha1(bytes);
    }

    void write_field(const std::string& name, const ScalarField& f)
    {
        const auto bytes = encode_field(f);
        write(name, std::string(bytes.begin(), bytes.end()));
    }
};

struct Solved {
    std::optional<ScalarField> u;
    SolveReport report;
    json detail;
};

Solved solve_one(const Problem& p, const RunConfig& c)
{
    Solved out;
    auto via_continuation = [&](int steps) {
        ContinuationResult r = continuation_s(p, uniform_schedule(steps), c.solver);
        json steps_json = json::array();
        for (const auto& s : r.steps)
            steps_json.push_back({{"s", s.s}, {"iterations", s.report.iterations}, {"converged", s.report.converged},
                                  {"final_residual", s.report.residuals.back()}});
        out.detail["continuation"] = steps_json;
        out.report = r.steps.back().report;
        out.u = std::move(r.u);
    };

    if (c.continuation > 0) {
        via_continuation(c.continuation);
        return out;
    }
    SolveResult r = newton_solve(p, c.solver, initial_guess(p));
    out.report = r.report;
    if (r.report.converged) {
        out.u = std::move(r.u);
        return out;
    }
    if (p.kind == OperatorKind::Donaldson) {
        out.detail["cold_start"] = solve_json(r.report);
        try {
            via_continuation(10);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonConvergence) throw;
            out.detail["continuation_error"] = e.what();
        }
    }
    return out;
}

Problem build_problem(const RunConfig& c, double eps)
{
    const GridSpec spec = build_grid(c.n, c.nx, c.nt);
    const BoundaryGen g = parse_boundary(c.boundary, c.n);
    std::vector<double> u0, u1;
    g.fill(spec, u0, u1);
    return make_problem(c.kind, spec, eps, std::move(u0), std::move(u1));
}

json boundary_json(const RunConfig& c, const Problem& p)
{
    const BoundaryGen g = parse_boundary(c.boundary, c.n);
    const double lam = boundary_lambda(p);
    if (!(lam > 0.0)) fail(ErrorCode::Config, "measured boundary lambda " + fmt(lam) + " is not positive");
    return {{"generator", c.boundary}, {"guarantee", g.guarantee()}, {"lambda_measured", lam}};
}

std::string eps_tag(std::size_t i) { return std::to_string(i); }

int solve_like(const RunConfig& c, Artifacts& art, json& results)
{
    const bool verify = c.command == Command::Verify;
    const int k = c.probe_k == 0 ? c.n : c.probe_k;
    int code = kExitOk;
    json runs = json::array();
    for (std::size_t i = 0; i < c.eps.size(); ++i) {
        const Problem p = build_problem(c, c.eps[i]);
        if (i == 0) results["boundary"] = boundary_json(c, p);
        json run;
        run["epsilon"] = c.eps[i];
        const Solved s = solve_one(p, c);
        run["solve"] = solve_json(s.report);
        if (!s.detail.is_null()) run["path"] = s.detail;
        if (!s.u) {
            code = std::max(code, static_cast<int>(kExitNonConvergence));
            runs.push_back(run);
            continue;
        }
        if (c.dump_fields) art.write_field("u_" + eps_tag(i) + ".fld", *s.u);
        if (verify) {
            const RankReport rank = check_theorems(*s.u, p, c.verify);
            run["theorems"] = rank_json(p.spec, rank);
            run["probe"] = probe_json(p.spec, key_estimate_probe(*s.u, p, k));
            if (!rank.all_applicable_pass()) code = std::max(code, static_cast<int>(kExitViolation));
        }
        runs.push_back(run);
    }
    results["runs"] = runs;
    return code;
}

int sweep(const RunConfig& c, Artifacts& art, json& results)
{
    const Problem p = build_problem(c, c.eps.front());
    results["boundary"] = boundary_json(c, p);
    const int k = c.probe_k == 0 ? c.n : c.probe_k;
    const auto entries = epsilon_sweep(p, c.eps, c.solver, c.verify);

    int code = kExitOk;
    json list = json::array();
    std::string csv = "eps,converged,iterations,final_residual,mu0,lambda_boundary,margin,tol,lower_bound_pass,"
                      "constant_rank_pass,strict_pass,all_applicable_pass,ranks,sup_ratio,global_sup_ratio\n";
    std::vector<double> sups;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const SweepEntry& e = entries[i];
        json j;
        j["epsilon"] = e.eps;
        j["solve"] = solve_json(e.report);
        if (!e.error.empty()) j["error"] = e.error;
        std::string row = fmt(e.eps) + "," + (e.u ? "1" : "0") + "," + std::to_string(e.report.iterations) + "," +
                          fmt(e.report.residuals.empty() ? 0.0 : e.report.residuals.back());
        if (e.u && e.rank) {
            Problem pe = p;
            pe.eps = e.eps;
            const ProbeReport probe = key_estimate_probe(*e.u, pe, k);
            sups.push_back(probe.sup_ratio);
            j["theorems"] = rank_json(p.spec, *e.rank);
            j["probe"] = probe_json(p.spec, probe);
            if (c.dump_fields) art.write_field("u_" + eps_tag(i) + ".fld", *e.u);
            std::string ranks;
            for (const auto& [rank, count] : e.rank->rank_histogram)
                ranks += (ranks.empty() ? "" : ";") + std::to_string(rank) + ":" + std::to_string(count);
            row += "," + fmt(e.rank->mu0) + "," + fmt(e.rank->lambda_boundary) + "," + fmt(e.rank->margin) + "," +
                   fmt(e.rank->tol) + "," + std::to_string(e.rank->lower_bound_pass) + "," +
                   std::to_string(e.rank->constant_rank_pass) + "," + std::to_string(e.rank->strict_pass) + "," +
                   std::to_string(e.rank->all_applicable_pass()) + "," + ranks + "," + fmt(probe.sup_ratio) + "," +
                   fmt(probe.global_sup_ratio);
            if (!e.rank->all_applicable_pass()) code = std::max(code, static_cast<int>(kExitViolation));
        } else {
            row += ",,,,,,,,,,,";
            code = std::max(code, static_cast<int>(kExitNonConvergence));
        }
        csv += row + "\n";
        list.push_back(j);
    }
    results["entries"] = list;
    if (sups.size() >= 2) {
        const auto [lo, hi] = std::minmax_element(sups.begin(), sups.end());
        results["probe_variation"] = *lo > 0.0 ? *hi / *lo - 1.0 : 0.0;
    }
    art.write("sweep.csv", csv);
    return code;
}

// --------------------------------------------------------------- identity

struct CheckRow {
    std::uint64_t seed;
    std::string check;
    int n;
    int num_good;
    std::string mode;
    double delta;
    double value;
    double discrepancy;
    int ok;  // 1 pass, 0 fail, -1 not asserted
};

struct SuiteStats {
    std::size_t count = 0;
    double max_disc = 0.0;
    double sum_disc = 0.0;
    std::size_t violations = 0;
    double tolerance = 0.0;
    bool asserted = false;
};

int identity(const RunConfig& c, Artifacts& art, json& results)
{
    std::vector<std::string> checks;
    if (c.check == "all")
        checks = {"lemma1", "lemma2", "lemma3", "kn", "qforms", "qnonneg", "qstar", "v"};
    else
        checks = {c.check};

    const bool exact = c.mode == SampleMode::Exact;
    std::vector<CheckRow> rows;
    std::map<std::string, SuiteStats> stats;

    auto record = [&](const CheckRow& r, double tol, bool assert_disc, bool assert_flag) {
        CheckRow row = r;
        bool pass = true;
        if (assert_disc && !(row.discrepancy < tol)) pass = false;
        if (assert_flag && row.ok == 0) pass = false;
        if (!assert_disc && !assert_flag) row.ok = -1;
        else row.ok = pass ? 1 : 0;
        rows.push_back(row);
        const std::string key = row.check + "/n" + std::to_string(row.n) + "/G" + std::to_string(row.num_good);
        SuiteStats& st = stats[key];
        st.count++;
        st.max_disc = std::max(st.max_disc, row.discrepancy);
        st.sum_disc += row.discrepancy;
        st.tolerance = tol;
        st.asserted = assert_disc || assert_flag;
        if (row.ok == 0) st.violations++;
    };

    const std::string mode = mode_text(c.mode, c.delta);
    for (const std::string& check : checks) {
        for (int i = 0; i < c.seeds; ++i) {
            const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
            if (check == "lemma1" || check == "lemma2" || check == "lemma3") {
                if (c.n < 2) continue;
                const JetSample s = sample_jet(c.n, 1, OperatorKind::MongeAmpere, c.mode, c.delta, seed);
                if (check == "lemma1") {
                    const LemmaResult r = check_ma_lemma1(s);
                    record({seed, check, c.n, 1, mode, c.delta, r.per_m.front().lhs, r.discrepancy, 1}, 1e-10, exact,
                           false);
                } else if (check == "lemma2") {
                    const LemmaResult r = check_ma_lemma2(s);
                    record({seed, check, c.n, 1, mode, c.delta, r.per_m.front().lhs, r.discrepancy, 1}, 1e-10, exact,
                           false);
                } else {
                    const Lemma3Result r = check_ma_lemma3(s);
                    const double zmax = *std::max_element(r.z.begin(), r.z.end());
                    record({seed, "lemma3", c.n, 1, mode, c.delta, zmax, r.discrepancy, r.sign_ok && r.proxy_ok ? 1 : 0},
                           1e-10, exact, exact);
                    record({seed, "lemma3_literal", c.n, 1, mode, c.delta, zmax, r.literal.discrepancy, -1}, 0.0,
                           false, false);
                }
            } else if (check == "kn") {
                const JetSample s = sample_jet(c.n, 0, OperatorKind::MongeAmpere, c.mode, c.delta, seed);
                const KEqualsNResult r = check_ma_K_equals_n(s);
                record({seed, check, c.n, 0, mode, c.delta, r.ftt, r.discrepancy, 1}, 1e-10, exact, false);
            } else if (check == "qforms" || check == "qnonneg") {
                for (int g = 0; g <= std::min(2, c.n); ++g) {
                    if (g == c.n) continue;  // no bad direction
                    const JetSample s = sample_jet(c.n, g, OperatorKind::Donaldson, c.mode, c.delta, seed);
                    if (check == "qforms") {
                        const QFormsResult r = q_forms(s);
                        record({seed, check, c.n, g, mode, c.delta, r.per_m.front().q_a, r.max_pairwise, 1}, 1e-9,
                               exact, false);
                    } else {
                        const QNonnegResult r = check_q_nonneg(s);
                        record({seed, check, c.n, g, mode, c.delta, r.q_min, 0.0, r.nonneg && r.groups_nonneg ? 1 : 0},
                               0.0, false, exact);
                    }
                }
            } else if (check == "qstar") {
                for (int g = 1; g < c.n; ++g) {
                    SampleOptions o = default_sample_options(OperatorKind::Donaldson, g);
                    o.mu0_lo = 0.0;
                    o.mu0_hi = 0.5;
                    const JetSample s = sample_jet(c.n, g, OperatorKind::Donaldson, c.mode, c.delta, seed, o);
                    const QStarResult r = check_qstar_nonneg(s);
                    record({seed, check, c.n, g, mode, c.delta, r.q_min, 0.0, r.nonneg ? 1 : 0}, 0.0, false, true);
                }
            } else if (check == "v") {
                const double d = exact ? 1e-2 : c.delta;
                for (int g = 0; g < c.n; ++g) {
                    const JetSample s = sample_jet(c.n, g, OperatorKind::Donaldson, SampleMode::Scaled, d, seed);
                    const VReport r = eval_V(s);
                    record({seed, check, c.n, g, mode_text(SampleMode::Scaled, d), d, r.correction, 0.0,
                            r.correction_nonneg ? 1 : 0},
                           0.0, false, true);
                }
            } else if (check == "g3probe") {
                SampleOptions o = default_sample_options(OperatorKind::Donaldson, 3);
                o.wide = true;
                const JetSample s = sample_jet(4, 3, OperatorKind::Donaldson, c.mode, c.delta, seed, o);
                const QFormsResult r = q_forms(s);
                double qmin = r.per_m.front().q_cd;
                for (const auto& q : r.per_m) qmin = std::min(qmin, q.q_cd);
                record({seed, check, 4, 3, mode, c.delta, qmin, r.max_pairwise, qmin >= 0.0 ? 1 : 0}, 0.0, false,
                       false);
            }
        }
    }

    std::string csv = "seed,check,n,num_good,mode,delta,value,discrepancy,ok\n";
    for (const auto& r : rows)
        csv += std::to_string(r.seed) + "," + r.check + "," + std::to_string(r.n) + "," +
               std::to_string(r.num_good) + "," + r.mode + "," + fmt(r.delta) + "," + fmt(r.value) + "," +
               fmt(r.discrepancy) + "," + std::to_string(r.ok) + "\n";
    art.write("identity.csv", csv);

    int code = kExitOk;
    json summary = json::object();
    for (const auto& [key, st] : stats) {
        summary[key] = {{"count", st.count},
                        {"max_discrepancy", st.max_disc},
                        {"mean_discrepancy", st.count ? st.sum_disc / static_cast<double>(st.count) : 0.0},
                        {"violations", st.violations},
                        {"tolerance", st.tolerance},
                        {"asserted", st.asserted}};
        if (st.violations) code = kExitViolation;
    }
    if (c.check == "g3probe") {
        std::size_t negative = 0;
        double qmin = 0.0;
        for (const auto& r : rows) {
            negative += r.value < 0.0;
            qmin = std::min(qmin, r.value);
        }
        results["g3probe"] = {{"samples", rows.size()}, {"negative", negative}, {"q_min", qmin}};
    }
    results["summary"] = summary;
    return code;
}

int report_command(const RunConfig& c, json& results)
{
    const auto path = std::filesystem::path(c.out_dir) / "report.json";
    std::ifstream is(path);
    if (!is) fail(ErrorCode::Config, "no report at " + path.string());
    json prior;
    try {
        prior = json::parse(is);
    } catch (const json::exception& e) {
        fail(ErrorCode::Io, path.string() + " is not valid JSON: " + e.what());
    }
    const auto manifest_path = std::filesystem::path(c.out_dir) / "manifest.json";
    std::ifstream ms(manifest_path);
    if (!ms) fail(ErrorCode::Config, "no manifest at " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(ms);
    } catch (const json::exception& e) {
        fail(ErrorCode::Io, manifest_path.string() + " is not valid JSON: " + e.what());
    }
    const json artifacts = manifest.value("artifacts", json::object());
    json mismatched = json::array();
    for (const auto& [name, hash] : artifacts.items()) {
        std::ifstream as(std::filesystem::path(c.out_dir) / name, std::ios::binary);
        if (!as) {
            mismatched.push_back(name);
            continue;
        }
        const std::string bytes((std::istreambuf_iterator<char>(as)), std::istreambuf_iterator<char>());
        if (git_blob_sha1(bytes) != hash.get<std::string>()) mismatched.push_back(name);
    }
    if (!mismatched.empty())
        fail(ErrorCode::Precondition, "artifacts differ from manifest.json: " + mismatched.dump());

    results["source"] = path.string();
    results["artifacts_verified"] = artifacts.size();
    results["command"] = prior.value("command", "");
    results["exit_code"] = prior.value("exit_code", -1);
    if (prior.contains("error")) results["error"] = prior["error"];
    if (prior.contains("results") && prior["results"].contains("summary"))
        results["summary"] = prior["results"]["summary"];
    if (prior.contains("results") && prior["results"].contains("runs")) {
        json brief = json::array();
        for (const auto& r : prior["results"]["runs"]) {
            json b{{"epsilon", r.value("epsilon", 0.0)}, {"converged", r["solve"].value("converged", false)}};
            if (r.contains("theorems")) b["all_applicable_pass"] = r["theorems"].value("all_applicable_pass", false);
            brief.push_back(b);
        }
        results["runs"] = brief;
    }
    if (prior.contains("results") && prior["results"].contains("entries")) results["entries"] = prior["results"]["entries"].size();
    return kExitOk;
}

int exit_code_for(ErrorCode e)
{
    switch (e) {
    case ErrorCode::Config:
    case ErrorCode::Contract:
    case ErrorCode::Sampling:
    case ErrorCode::Precondition: return kExitValidation;
    case ErrorCode::NonConvergence:
    case ErrorCode::Degenerate: return kExitNonConvergence;
    case ErrorCode::Io: return kExitInternal;
    }
    return kExitInternal;
}

} // namespace

RunOutcome run(const RunConfig& config)
{
    RunOutcome out;
    json report;
    report["command"] = to_string(config.command);
    report["config"] = config_json(config);
    report["config_hash"] = git_blob_sha1(config_json(config).dump());
    json results = json::object();

    Artifacts art;
    art.dir = config.out_dir;
    const auto started = std::chrono::steady_clock::now();
    bool can_write = config.command != Command::Report;
    try {
        config.validate();
        if (can_write) {
            std::error_code ec;
            std::filesystem::create_directories(art.dir, ec);
            if (ec) fail(ErrorCode::Io, "cannot create output directory " + art.dir.string() + ": " + ec.message());
        }
        switch (config.command) {
        case Command::Solve:
        case Command::Verify: out.exit_code = solve_like(config, art, results); break;
        case Command::Sweep: out.exit_code = sweep(config, art, results); break;
        case Command::Identity: out.exit_code = identity(config, art, results); break;
        case Command::Report: out.exit_code = report_command(config, results); break;
        }
        if (out.exit_code == kExitNonConvergence)
            report["error"] = {{"category", "non_convergence"}, {"message", "one or more solves did not converge"}};
        else if (out.exit_code == kExitViolation)
            report["error"] = {{"category", "violation"}, {"message", "a checked statement failed at its tolerance"}};
    } catch (const Error& e) {
        out.exit_code = exit_code_for(e.code());
        report["error"] = {{"category", to_string(e.code())}, {"message", e.what()}};
    } catch (const std::exception& e) {
        out.exit_code = kExitInternal;
        report["error"] = {{"category", "internal"}, {"message", e.what()}};
    }
    report["results"] = results;
    report["exit_code"] = out.exit_code;
    out.report_json = report.dump(2) + "\n";
    if (!can_write) return out;

    try {
        std::error_code ec;
        std::filesystem::create_directories(art.dir, ec);
        art.write("report.json", out.report_json);
        json manifest;
        manifest["config"] = config_json(config);
        manifest["config_hash"] = git_blob_sha1(config_json(config).dump());
        if (!config.config_file.empty()) {
            std::ifstream is(config.config_file, std::ios::binary);
            if (is) {
                const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
                manifest["config_file_hash"] = git_blob_sha1(bytes);
            }
        }
        manifest["artifacts"] = art.hashes;
        const std::string m = manifest.dump(2) + "\n";
        std::ofstream(art.dir / "manifest.json", std::ios::binary) << m;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::ofstream(art.dir / "run.log") << to_string(config.command) << " wall_seconds " << secs << "\n";
    } catch (const std::exception& e) {
        if (out.exit_code == kExitOk) out.exit_code = kExitInternal;
    }
    return out;
}

RunOutcome run_json(const std::string& config_text)
{
    RunConfig c;
    try {
        c = config_from_json(config_text);
    } catch (const Error& e) {
        json report;
        report["error"] = {{"category", to_string(e.code())}, {"message", e.what()}};
        report["exit_code"] = kExitValidation;
        return {kExitValidation, report.dump(2) + "\n"};
    }
    return run(c);
}

} // namespace maxrank

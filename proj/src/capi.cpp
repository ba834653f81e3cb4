#include "maxrank/maxrank.h"

#include "maxrank/error.hpp"
#include "maxrank/run.hpp"
#include "maxrank/solver.hpp"
#include "maxrank/verifier.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

struct mxr_grid {
    maxrank::GridSpec spec;
};

struct mxr_field {
    maxrank::ScalarField field;
};

struct mxr_problem {
    maxrank::Problem problem;
};

namespace {

thread_local std::string g_last_error;

mxr_status set_error(mxr_status s, const std::string& msg)
{
    g_last_error = msg;
    return s;
}

template <class F>
mxr_status guarded(F&& f)
{
    try {
        g_last_error.clear();
        return f();
    } catch (const maxrank::Error& e) {
        return set_error(static_cast<mxr_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(MXR_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(MXR_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(MXR_ERR_INTERNAL, "unknown exception");
    }
}

#define MXR_REQUIRE(cond, what) \
    do { \
        if (!(cond)) return set_error(MXR_ERR_CONTRACT, what); \
    } while (0)

char* dup_string(const std::string& s)
{
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

maxrank::SolverConfig to_config(const mxr_solver_options* o)
{
    maxrank::SolverConfig c;
    if (!o) return c;
    c.tol = o->tol;
    c.max_iter = o->max_iter;
    c.backtrack = o->backtrack;
    c.min_step = o->min_step;
    c.cone_safeguard = o->cone_safeguard != 0;
    return c;
}

} // namespace

extern "C" {

const char* mxr_version(void) { return "0.1.0"; }

const char* mxr_last_error_message(void) { return g_last_error.c_str(); }

const char* mxr_status_name(mxr_status status)
{
    switch (status) {
    case MXR_OK: return "ok";
    case MXR_ERR_INTERNAL: return "internal";
    default: break;
    }
    const int c = static_cast<int>(status);
    if (c >= 1 && c <= 7) return maxrank::to_string(static_cast<maxrank::ErrorCode>(c));
    return "unknown";
}

void mxr_string_free(char* s) { std::free(s); }

mxr_status mxr_grid_create(int n, int nx, int nt, mxr_grid** out)
{
    MXR_REQUIRE(out, "out is null");
    *out = nullptr;
    return guarded([&] {
        *out = new mxr_grid{maxrank::build_grid(n, nx, nt)};
        return MXR_OK;
    });
}

void mxr_grid_destroy(mxr_grid* grid) { delete grid; }

mxr_status mxr_grid_size(const mxr_grid* grid, size_t* points, size_t* space_points)
{
    MXR_REQUIRE(grid, "grid is null");
    if (points) *points = grid->spec.size();
    if (space_points) *space_points = grid->spec.space_points();
    return MXR_OK;
}

mxr_status mxr_field_create(const mxr_grid* grid, const double* values, size_t count, mxr_field** out)
{
    MXR_REQUIRE(grid && values && out, "null argument");
    *out = nullptr;
    MXR_REQUIRE(count == grid->spec.size(), "value count does not match the grid");
    return guarded([&] {
        *out = new mxr_field{maxrank::ScalarField(grid->spec, std::vector<double>(values, values + count))};
        return MXR_OK;
    });
}

void mxr_field_destroy(mxr_field* field) { delete field; }

mxr_status mxr_field_values(const mxr_field* field, double* out, size_t count)
{
    MXR_REQUIRE(field && out, "null argument");
    const auto v = field->field.values();
    MXR_REQUIRE(count == v.size(), "value count does not match the field");
    std::memcpy(out, v.data(), count * sizeof(double));
    return MXR_OK;
}

mxr_status mxr_field_write(const mxr_field* field, const char* path)
{
    MXR_REQUIRE(field && path, "null argument");
    return guarded([&] {
        maxrank::write_field(path, field->field);
        return MXR_OK;
    });
}

mxr_status mxr_field_read(const char* path, mxr_field** out)
{
    MXR_REQUIRE(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new mxr_field{maxrank::read_field(path)};
        return MXR_OK;
    });
}

mxr_status mxr_problem_create(mxr_operator op, const mxr_grid* grid, double eps, const double* u0, const double* u1,
                              size_t count, mxr_problem** out)
{
    MXR_REQUIRE(grid && u0 && u1 && out, "null argument");
    *out = nullptr;
    MXR_REQUIRE(op == MXR_MONGE_AMPERE || op == MXR_DONALDSON, "unknown operator");
    MXR_REQUIRE(count == grid->spec.space_points(), "boundary count does not match the space lattice");
    return guarded([&] {
        const auto kind = op == MXR_MONGE_AMPERE ? maxrank::OperatorKind::MongeAmpere : maxrank::OperatorKind::Donaldson;
        *out = new mxr_problem{maxrank::make_problem(kind, grid->spec, eps, std::vector<double>(u0, u0 + count),
                                                     std::vector<double>(u1, u1 + count))};
        return MXR_OK;
    });
}

void mxr_problem_destroy(mxr_problem* problem) { delete problem; }

mxr_status mxr_boundary_lambda(const mxr_problem* problem, double* out)
{
    MXR_REQUIRE(problem && out, "null argument");
    return guarded([&] {
        *out = maxrank::boundary_lambda(problem->problem);
        return MXR_OK;
    });
}

void mxr_solver_options_default(mxr_solver_options* opts)
{
    if (!opts) return;
    const maxrank::SolverConfig c;
    opts->tol = c.tol;
    opts->max_iter = c.max_iter;
    opts->backtrack = c.backtrack;
    opts->min_step = c.min_step;
    opts->cone_safeguard = c.cone_safeguard ? 1 : 0;
    opts->continuation = 0;
}

mxr_status mxr_solve(const mxr_problem* problem, const mxr_solver_options* opts, mxr_field** out,
                     mxr_solve_info* info)
{
    MXR_REQUIRE(problem && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        const maxrank::Problem& p = problem->problem;
        const maxrank::SolverConfig cfg = to_config(opts);
        cfg.validate();
        const int steps = opts ? opts->continuation : 0;
        if (steps < 0) maxrank::fail(maxrank::ErrorCode::Config, "continuation steps must be non-negative");
        if (steps > 0 && p.kind != maxrank::OperatorKind::Donaldson)
            maxrank::fail(maxrank::ErrorCode::Config, "continuation is defined for the Donaldson operator only");

        std::optional<maxrank::ScalarField> u;
        maxrank::SolveReport rep;
        if (steps > 0) {
            auto r = maxrank::continuation_s(p, maxrank::uniform_schedule(steps), cfg);
            rep = r.steps.back().report;
            u = std::move(r.u);
        } else {
            auto r = maxrank::newton_solve(p, cfg, maxrank::initial_guess(p));
            rep = r.report;
            if (rep.converged) u = std::move(r.u);
        }
        if (info) {
            info->converged = rep.converged ? 1 : 0;
            info->iterations = rep.iterations;
            info->final_residual = rep.residuals.empty() ? 0.0 : rep.residuals.back();
            info->cone_margin = rep.cone_margin;
        }
        if (!u) return set_error(MXR_ERR_NONCONVERGENCE, rep.message.empty() ? "solver did not converge" : rep.message);
        *out = new mxr_field{std::move(*u)};
        return MXR_OK;
    });
}

mxr_status mxr_check_theorems(const mxr_field* u, const mxr_problem* problem, double tol, mxr_theorem_info* out)
{
    MXR_REQUIRE(u && problem && out, "null argument");
    return guarded([&] {
        maxrank::VerifyOptions o;
        o.tol = tol;
        const maxrank::RankReport r = maxrank::check_theorems(u->field, problem->problem, o);
        out->mu0 = r.mu0;
        out->lambda_boundary = r.lambda_boundary;
        out->tol = r.tol;
        out->min_rank = r.rank_histogram.empty() ? 0 : r.rank_histogram.begin()->first;
        out->max_rank = r.rank_histogram.empty() ? 0 : r.rank_histogram.rbegin()->first;
        out->lower_bound_pass = r.lower_bound_pass;
        out->lower_bound_applies = r.lower_bound_applies;
        out->constant_rank_pass = r.constant_rank_pass;
        out->constant_rank_applies = r.constant_rank_applies;
        out->strict_pass = r.strict_pass;
        out->strict_applies = r.strict_applies;
        return MXR_OK;
    });
}

mxr_status mxr_run(const char* config_json, char** report, int* exit_code)
{
    MXR_REQUIRE(config_json && report && exit_code, "null argument");
    *report = nullptr;
    *exit_code = maxrank::kExitInternal;
    return guarded([&] {
        const maxrank::RunOutcome r = maxrank::run_json(config_json);
        *report = dup_string(r.report_json);
        *exit_code = r.exit_code;
        return MXR_OK;
    });
}

} // extern "C"

#include "maxrank/solver.hpp"

#include "maxrank/error.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace maxrank {

void SolverConfig::validate() const
{
    if (!(tol > 0)) fail(ErrorCode::Config, "solver tol must be positive");
    if (max_iter < 0) fail(ErrorCode::Config, "solver max_iter must be non-negative");
    if (!(backtrack > 0 && backtrack < 1)) fail(ErrorCode::Config, "backtrack factor must lie in (0,1)");
    if (!(min_step > 0 && min_step <= 1)) fail(ErrorCode::Config, "min step must lie in (0,1]");
}

namespace {

struct Evaluation {
    std::vector<double> residual;  // interior unknown order
    double norm = 0.0;
    double min_margin = std::numeric_limits<double>::infinity();
    GridPoint worst;
};

Evaluation evaluate(const Problem& problem, std::span<const double> u, bool with_cone)
{
    const GridSpec& spec = problem.spec;
    Evaluation e;
    e.residual.assign(interior_unknowns(spec), 0.0);
    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        const Jet2 jet = jet_at(spec, u, p);
        const double r = f_value(problem.kind, jet) - problem.eps;
        e.residual[interior_index(spec, p)] = r;
        e.norm = std::max(e.norm, std::abs(r));
        if (with_cone) {
            const double m = cone_check(problem.kind, jet).margin;
            if (m < e.min_margin) {
                e.min_margin = m;
                e.worst = p;
            }
        }
    });
    return e;
}

void scatter_interior(const GridSpec& spec, std::span<const double> interior, double scale, std::vector<double>& u)
{
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    const auto inner = static_cast<std::size_t>(spec.nt - 1);
    for (std::size_t s = 0; s < spec.space_points(); ++s)
        for (std::size_t k = 0; k < inner; ++k) u[s * slices + k + 1] += scale * interior[s * inner + k];
}

std::vector<double> direct_solve(const Eigen::SparseMatrix<double>& jac, const Eigen::VectorXd& b)
{
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(jac);
    lu.factorize(jac);
    if (lu.info() != Eigen::Success)
        fail(ErrorCode::Degenerate, "Jacobian factorization failed (degenerate linearization): " + lu.lastErrorMessage());
    const Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite())
        fail(ErrorCode::Degenerate, "Jacobian solve failed (degenerate linearization)");
    return std::vector<double>(x.data(), x.data() + x.size());
}

// Direct factorization on a single core costs tens of seconds at 3-10e4
// unknowns; restarted GMRES with an ILUT preconditioner solves the same
// systems in about a second. Small systems keep the direct path.
constexpr std::size_t kDirectLimit = 6000;

struct IlutLevel {
    double fill;
    double drop;
};

std::vector<double> linear_solve(const Eigen::SparseMatrix<double>& jac, const std::vector<double>& rhs)
{
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    if (rhs.size() <= kDirectLimit) return direct_solve(jac, b);

    const double bnorm = b.norm();
    for (const IlutLevel level : {IlutLevel{1.0, 1e-3}, IlutLevel{4.0, 1e-5}}) {
        Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gmres;
        gmres.preconditioner().setFillfactor(level.fill);
        gmres.preconditioner().setDroptol(level.drop);
        gmres.set_restart(80);
        gmres.setMaxIterations(4000);
        gmres.setTolerance(1e-13);
        gmres.compute(jac);
        if (gmres.info() != Eigen::Success) continue;
        const Eigen::VectorXd x = gmres.solve(b);
        if (x.allFinite() && (jac * x - b).norm() <= 1e-11 * bnorm)
            return std::vector<double>(x.data(), x.data() + x.size());
    }
    return direct_solve(jac, b);
}

} // namespace

ScalarField initial_guess(const Problem& problem)
{
    const GridSpec& spec = problem.spec;
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    std::vector<double> v(spec.size());
    double scale = 1.0;
    Evaluation e;
    for (; scale <= 1073741824.0; scale *= 2.0) {
        for (std::size_t s = 0; s < spec.space_points(); ++s)
            for (std::size_t k = 0; k < slices; ++k) {
                const double t = static_cast<double>(k) * spec.ht;
                v[s * slices + k] = (1.0 - t) * problem.u0[s] + t * problem.u1[s] + scale * (t * t - t);
            }
        impose_boundary(problem, v);
        e = evaluate(problem, v, true);
        if (e.min_margin > 0.0) return ScalarField(spec, std::move(v));
    }
    fail(ErrorCode::NonConvergence, "initial guess never entered the ellipticity cone; worst point " +
                                        describe(spec, e.worst) + " margin " + std::to_string(e.min_margin));
}

SolveResult newton_solve(const Problem& problem, const SolverConfig& config, const ScalarField& start)
{
    config.validate();
    const GridSpec& spec = problem.spec;
    if (!(start.spec() == spec)) fail(ErrorCode::Contract, "start field grid does not match the problem");
    std::vector<double> u(start.values().begin(), start.values().end());
    {
        std::vector<double> check = u;
        impose_boundary(problem, check);
        if (check != u) fail(ErrorCode::Contract, "start field does not match the Dirichlet data");
    }

    SolveReport rep;
    Evaluation cur = evaluate(problem, u, true);
    if (config.cone_safeguard && !(cur.min_margin > 0.0))
        fail(ErrorCode::Contract, "start field leaves the ellipticity cone at " + describe(spec, cur.worst));
    rep.residuals.push_back(cur.norm);
    rep.cone_margins.push_back(cur.min_margin);

    while (cur.norm > config.tol && rep.iterations < config.max_iter) {
        const auto jac = assemble_jacobian(problem, u);
        std::vector<double> rhs(cur.residual.size());
        std::transform(cur.residual.begin(), cur.residual.end(), rhs.begin(), [](double r) { return -r; });
        const std::vector<double> delta = linear_solve(jac, rhs);

        double step = 1.0;
        bool accepted = false;
        std::vector<double> trial;
        Evaluation next;
        while (step >= config.min_step) {
            trial = u;
            scatter_interior(spec, delta, step, trial);
            next = evaluate(problem, trial, true);
            const bool in_cone = !config.cone_safeguard || next.min_margin > 0.0;
            if (in_cone && next.norm < cur.norm) {
                accepted = true;
                break;
            }
            step *= config.backtrack;
        }
        if (!accepted) {
            rep.message = "line search stalled below the minimum step";
            break;
        }
        u = std::move(trial);
        cur = std::move(next);
        ++rep.iterations;
        rep.steps.push_back(step);
        rep.residuals.push_back(cur.norm);
        rep.cone_margins.push_back(cur.min_margin);
    }
    rep.converged = cur.norm <= config.tol;
    rep.cone_margin = cur.min_margin;
    if (!rep.converged && rep.message.empty()) rep.message = "maximum Newton iterations reached";
    return SolveResult{ScalarField(spec, std::move(u)), std::move(rep)};
}

Problem homotopy_problem(const Problem& target, double s)
{
    if (!(s >= 0.0 && s <= 1.0)) fail(ErrorCode::Config, "homotopy parameter s must lie in [0,1]");
    Problem p = target;
    const double n = target.spec.n;
    p.eps = s * target.eps + 2.0 * n * (1.0 - s);
    for (std::size_t i = 0; i < p.u0.size(); ++i) {
        p.u0[i] = s * target.u0[i] + (1.0 - s);
        p.u1[i] = s * target.u1[i] + 2.0 * (1.0 - s);
    }
    return p;
}

std::vector<double> uniform_schedule(int steps)
{
    if (steps < 1) fail(ErrorCode::Config, "continuation needs at least one step");
    std::vector<double> s(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / steps;
    s.back() = 1.0;
    return s;
}

ContinuationResult continuation_s(const Problem& target, const std::vector<double>& schedule,
                                  const SolverConfig& config)
{
    if (target.kind != OperatorKind::Donaldson)
        fail(ErrorCode::Contract, "the s-homotopy is defined for the Donaldson operator only");
    if (schedule.size() < 2 || schedule.front() != 0.0 || schedule.back() != 1.0)
        fail(ErrorCode::Config, "continuation schedule must run from 0 to 1");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] > schedule[i - 1])) fail(ErrorCode::Config, "continuation schedule must increase");

    const GridSpec& spec = target.spec;
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    ContinuationResult out{sample(spec, [](const Vec&, double t) { return 1.0 + t * t; }), {}};

    Problem current = homotopy_problem(target, 0.0);
    {
        SolveResult r = newton_solve(current, config, out.u);
        if (!r.report.converged)
            fail(ErrorCode::NonConvergence, "continuation failed at s=0: " + r.report.message);
        out.u = std::move(r.u);
        out.steps.push_back({0.0, std::move(r.report)});
    }

    double s_cur = 0.0;
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        const double s_target = schedule[i];
        double ds = s_target - s_cur;
        int halvings = 0;
        while (s_cur < s_target) {
            const double s_try = std::min(s_target, s_cur + ds);
            const double s_next = (s_target - s_try) <= 1e-15 ? s_target : s_try;
            Problem next = homotopy_problem(target, s_next);

            // Predictor: previous solution plus the linear-in-t interpolation of
            // the boundary increment, with the new Dirichlet slices written in.
            std::vector<double> v(out.u.values().begin(), out.u.values().end());
            for (std::size_t s = 0; s < spec.space_points(); ++s) {
                const double d0 = next.u0[s] - current.u0[s];
                const double d1 = next.u1[s] - current.u1[s];
                for (std::size_t k = 1; k + 1 < slices; ++k) {
                    const double t = static_cast<double>(k) * spec.ht;
                    v[s * slices + k] += (1.0 - t) * d0 + t * d1;
                }
            }
            impose_boundary(next, v);

            bool ok = false;
            std::string why;
            try {
                SolveResult r = newton_solve(next, config, ScalarField(spec, std::move(v)));
                if (r.report.converged) {
                    out.u = std::move(r.u);
                    out.steps.push_back({s_next, std::move(r.report)});
                    ok = true;
                } else {
                    why = r.report.message;
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Contract && e.code() != ErrorCode::Degenerate) throw;
                why = e.what();
            }
            if (ok) {
                s_cur = s_next;
                current = std::move(next);
                continue;
            }
            if (++halvings > 6) {
                std::ostringstream os;
                os << "continuation stuck at s=" << s_cur << " (last attempt s=" << s_next << "): " << why;
                fail(ErrorCode::NonConvergence, os.str());
            }
            ds *= 0.5;
        }
    }
    return out;
}

std::vector<SweepEntry> epsilon_sweep(const Problem& problem, const std::vector<double>& eps_list,
                                      const SolverConfig& config, const VerifyOptions& verify)
{
    if (eps_list.empty()) fail(ErrorCode::Config, "epsilon list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0)) fail(ErrorCode::Config, "epsilon values must be positive");
        if (i && !(eps_list[i] < eps_list[i - 1])) fail(ErrorCode::Config, "epsilon list must decrease");
    }

    std::vector<SweepEntry> out;
    std::optional<ScalarField> warm;
    for (double eps : eps_list) {
        Problem p = problem;
        p.eps = eps;
        SweepEntry entry;
        entry.eps = eps;

        auto attempt = [&](const ScalarField& start) -> bool {
            try {
                SolveResult r = newton_solve(p, config, start);
                entry.report = r.report;
                if (!r.report.converged) {
                    entry.error = r.report.message;
                    return false;
                }
                entry.u = std::move(r.u);
                return true;
            } catch (const Error& e) {
                entry.error = e.what();
                return false;
            }
        };

        bool ok = warm && attempt(*warm);
        if (!ok) {
            try {
                ok = attempt(initial_guess(p));
            } catch (const Error& e) {
                entry.error = e.what();
            }
        }
        if (!ok && p.kind == OperatorKind::Donaldson) {
            try {
                ContinuationResult c = continuation_s(p, uniform_schedule(10), config);
                entry.report = c.steps.back().report;
                entry.u = std::move(c.u);
                ok = true;
            } catch (const Error& e) {
                entry.error = e.what();
            }
        }
        if (ok) {
            entry.error.clear();
            entry.rank = check_theorems(*entry.u, p, verify);
            warm = entry.u;
        }
        out.push_back(std::move(entry));
    }
    return out;
}

} // namespace maxrank

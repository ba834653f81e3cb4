#include "maxrank/verifier.hpp"

#include "maxrank/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maxrank {

namespace {

double min_eig_space(const Mat& hess_space)
{
    Mat m = hess_space;
    for (int i = 0; i < m.rows(); ++i) m(i, i) += 1.0;
    return eig_sym(m).eigs(0);
}

Mat space_block_plus_identity(const Jet2& jet)
{
    const int n = jet.n();
    Mat m = jet.hess.topLeftCorner(n, n);
    for (int i = 0; i < n; ++i) m(i, i) += 1.0;
    return m;
}

} // namespace

double boundary_lambda(const GridSpec& spec, std::span<const double> u0, std::span<const double> u1)
{
    if (u0.size() != spec.space_points() || u1.size() != spec.space_points())
        fail(ErrorCode::Contract, "boundary slices must live on the space lattice");
    // Embed both slices in a two-slice lattice so the periodic stencils apply.
    GridSpec flat = spec;
    flat.nt = 1;
    std::vector<double> values(flat.size());
    for (std::size_t s = 0; s < spec.space_points(); ++s) {
        values[2 * s] = u0[s];
        values[2 * s + 1] = u1[s];
    }
    double lam = std::numeric_limits<double>::infinity();
    for_each_point(flat, 0, 1, [&](const GridPoint& p) {
        lam = std::min(lam, min_eig_space(space_hessian_at(flat, values, p)));
    });
    return lam;
}

SpectrumField space_spectrum_field(const ScalarField& u)
{
    const GridSpec& spec = u.spec();
    SpectrumField out{spec, std::vector<Spectrum>(spec.size())};
    for_each_point(spec, 0, spec.nt, [&](const GridPoint& p) {
        Mat m = space_hessian_at(spec, u.values(), p);
        for (int i = 0; i < spec.n; ++i) m(i, i) += 1.0;
        out.spectra[flat_index(spec, p)] = eig_sym(m);
    });
    return out;
}

double default_theorem_tol(const GridSpec& spec)
{
    const double h = std::max(spec.hx, spec.ht);
    return 5.0 * h * h;
}

bool RankReport::all_applicable_pass() const
{
    return (!lower_bound_applies || lower_bound_pass) && (!constant_rank_applies || constant_rank_pass) &&
           (!strict_applies || strict_pass);
}

RankReport check_theorems(const ScalarField& u, const Problem& problem, const VerifyOptions& options)
{
    const GridSpec& spec = u.spec();
    if (!(spec == problem.spec)) fail(ErrorCode::Contract, "field grid does not match the problem");
    if (!(options.rank_rel_threshold > 0)) fail(ErrorCode::Config, "rank threshold must be positive");

    RankReport r;
    r.tol = options.tol < 0 ? default_theorem_tol(spec) : options.tol;
    r.lambda_boundary = boundary_lambda(problem);
    r.mu0 = std::numeric_limits<double>::infinity();

    const SpectrumField field = space_spectrum_field(u);
    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        const Vec& e = field.at(p).eigs;
        if (e(0) < r.mu0) {
            r.mu0 = e(0);
            r.argmin = p;
        }
        const double theta = options.rank_rel_threshold * (1.0 + std::max(0.0, e(e.size() - 1)));
        int rank = 0;
        for (int i = 0; i < e.size(); ++i) rank += e(i) >= theta ? 1 : 0;
        ++r.rank_histogram[rank];
        ++r.interior_points;
    });

    r.margin = r.mu0 - r.lambda_boundary;
    r.lower_bound_pass = r.mu0 >= r.lambda_boundary - r.tol;
    r.constant_rank_pass = r.rank_histogram.size() == 1;
    r.strict_pass = r.mu0 > 0.0;

    const int n = spec.n;
    const bool donaldson = problem.kind == OperatorKind::Donaldson;
    r.lower_bound_applies = n <= 2;
    r.constant_rank_applies = donaldson && n <= 3;
    r.strict_applies = !donaldson || n <= 3;
    return r;
}

ProbeReport key_estimate_probe(const ScalarField& u, const Problem& problem, int bad_count, double floor)
{
    const GridSpec& spec = u.spec();
    if (!(spec == problem.spec)) fail(ErrorCode::Contract, "field grid does not match the problem");
    if (bad_count < 1 || bad_count > spec.n) fail(ErrorCode::Contract, "bad eigenvalue count must lie in [1, n]");
    if (!(floor >= 0)) fail(ErrorCode::Config, "probe floor must be non-negative");

    ProbeReport rep;
    rep.bad_count = bad_count;
    rep.floor = floor;

    double mu0 = std::numeric_limits<double>::infinity();
    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        mu0 = std::min(mu0, min_eig_space(space_hessian_at(spec, u.values(), p)));
    });
    rep.mu0 = mu0;

    const int n = spec.n;
    const ScalarField phi = derived_field(u, [&](const Jet2& jet) {
        Mat m = space_block_plus_identity(jet);
        for (int i = 0; i < n; ++i) m(i, i) -= mu0;
        return phi_plain(eig_sym(m).eigs, bad_count);
    });

    std::vector<ProbeSample> all;
    for_each_point(spec, 2, spec.nt - 2, [&](const GridPoint& p) {
        const Jet2 pj = jet_at(phi, p);
        const Mat g = grad_F(problem.kind, jet_at(u, p));
        ProbeSample s;
        s.point = p;
        s.phi = pj.value;
        s.grad_norm = pj.grad.norm();
        s.linearized = (g.array() * pj.hess.array()).sum();
        s.ratio = s.linearized / (s.phi + s.grad_norm + floor);
        s.trace_f = g.trace();
        s.normalized_ratio = s.ratio / s.trace_f;
        all.push_back(s);
    });
    rep.probe_points = all.size();
    if (all.size() < 10) {
        rep.insufficient = true;
        rep.samples = all;
    } else {
        std::size_t keep = std::max<std::size_t>(10, (all.size() + 99) / 100);
        std::vector<ProbeSample> sorted = all;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const ProbeSample& a, const ProbeSample& b) { return a.phi < b.phi; });
        sorted.resize(keep);
        rep.samples = std::move(sorted);
    }
    const double lowest = -std::numeric_limits<double>::infinity();
    rep.sup_ratio = rep.sup_normalized_ratio = rep.global_sup_ratio = all.empty() ? 0.0 : lowest;
    for (const auto& s : rep.samples) {
        rep.sup_ratio = std::max(rep.sup_ratio, s.ratio);
        rep.sup_normalized_ratio = std::max(rep.sup_normalized_ratio, s.normalized_ratio);
    }
    for (const auto& s : all) rep.global_sup_ratio = std::max(rep.global_sup_ratio, s.ratio);
    return rep;
}

} // namespace maxrank

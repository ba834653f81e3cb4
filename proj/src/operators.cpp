#include "maxrank/operators.hpp"

#include "maxrank/error.hpp"
#include "maxrank/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace maxrank {

std::string to_string(OperatorKind k)
{
    return k == OperatorKind::MongeAmpere ? "ma" : "donaldson";
}

OperatorKind operator_from_string(const std::string& s)
{
    if (s == "ma" || s == "monge-ampere" || s == "MongeAmpere") return OperatorKind::MongeAmpere;
    if (s == "donaldson" || s == "Donaldson") return OperatorKind::Donaldson;
    fail(ErrorCode::Config, "unknown operator '" + s + "' (expected ma or donaldson)");
}

Mat shifted_hessian(const Jet2& jet)
{
    Mat m = jet.hess;
    for (int j = 0; j < jet.n(); ++j) m(j, j) += 1.0;
    return m;
}

double f_matrix(OperatorKind kind, const Mat& m)
{
    if (kind == OperatorKind::MongeAmpere) return det(m);
    const int t = static_cast<int>(m.rows()) - 1;
    double trace = 0.0, cross = 0.0;
    for (int j = 0; j < t; ++j) {
        trace += m(j, j);
        cross += m(j, t) * m(t, j);
    }
    return m(t, t) * trace - cross;
}

Mat grad_matrix(OperatorKind kind, const Mat& m)
{
    const int d = static_cast<int>(m.rows());
    Mat g = Mat::Zero(d, d);
    if (kind == OperatorKind::MongeAmpere) {
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) g(a, b) = ((a + b) % 2 ? -1.0 : 1.0) * minor_det(m, a, b);
        return g;
    }
    const int t = d - 1;
    for (int j = 0; j < t; ++j) {
        g(t, t) += m(j, j);
        g(j, j) = m(t, t);
        g(j, t) = -m(t, j);
        g(t, j) = -m(j, t);
    }
    return g;
}

double Tensor4::contract(const Mat& x, const Mat& y) const
{
    double s = 0.0;
    for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) {
            if (x(a, b) == 0.0) continue;
            for (int c = 0; c < dim_; ++c)
                for (int e = 0; e < dim_; ++e) s += (*this)(a, b, c, e) * x(a, b) * y(c, e);
        }
    return s;
}

Tensor4 hess_matrix(OperatorKind kind, const Mat& m)
{
    const int d = static_cast<int>(m.rows());
    Tensor4 h(d);
    if (kind == OperatorKind::MongeAmpere) {
        // Second-order signed cofactors: zero when a row or a column repeats.
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c)
                    for (int e = 0; e < d; ++e) {
                        if (a == c || b == e) continue;
                        const double sign = ((a + b + c + e) % 2 ? -1.0 : 1.0) * (c > a ? 1.0 : -1.0) *
                                            (e > b ? 1.0 : -1.0);
                        h(a, b, c, e) = sign * minor_det(m, a, b, c, e);
                    }
        return h;
    }
    const int t = d - 1;
    for (int j = 0; j < t; ++j) {
        h(t, t, j, j) = 1.0;
        h(j, j, t, t) = 1.0;
        h(j, t, t, j) = -1.0;
        h(t, j, j, t) = -1.0;
    }
    return h;
}

double f_value(OperatorKind kind, const Jet2& jet)
{
    if (kind == OperatorKind::MongeAmpere) return det(shifted_hessian(jet));
    const int n = jet.n();
    double lap = 0.0, cross = 0.0;
    for (int j = 0; j < n; ++j) {
        lap += jet.hess(j, j);
        cross += jet.hess(j, n) * jet.hess(j, n);
    }
    return jet.hess(n, n) * (n + lap) - cross;
}

Mat grad_F(OperatorKind kind, const Jet2& jet) { return grad_matrix(kind, shifted_hessian(jet)); }

Tensor4 hess_F(OperatorKind kind, const Jet2& jet) { return hess_matrix(kind, shifted_hessian(jet)); }

ConeStatus cone_check(OperatorKind kind, const Jet2& jet)
{
    ConeStatus c;
    if (kind == OperatorKind::MongeAmpere) {
        c.margin = eig_sym(shifted_hessian(jet)).eigs(0);
    } else {
        const int n = jet.n();
        double trace = n;
        for (int j = 0; j < n; ++j) trace += jet.hess(j, j);
        c.margin = std::min(trace, f_value(kind, jet));
    }
    c.inside = c.margin > 0.0;
    return c;
}

Problem make_problem(OperatorKind kind, const GridSpec& spec, double eps,
                     std::vector<double> u0, std::vector<double> u1)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) fail(ErrorCode::Config, "epsilon must be a positive finite number");
    if (u0.size() != spec.space_points() || u1.size() != spec.space_points())
        fail(ErrorCode::Config, "boundary data must be sampled on the space lattice");
    for (double v : u0)
        if (!std::isfinite(v)) fail(ErrorCode::Sampling, "non-finite lower boundary value");
    for (double v : u1)
        if (!std::isfinite(v)) fail(ErrorCode::Sampling, "non-finite upper boundary value");
    return Problem{kind, spec, eps, std::move(u0), std::move(u1)};
}

void impose_boundary(const Problem& problem, std::vector<double>& values)
{
    const auto slices = static_cast<std::size_t>(problem.spec.nt + 1);
    for (std::size_t s = 0; s < problem.spec.space_points(); ++s) {
        values[s * slices] = problem.u0[s];
        values[s * slices + slices - 1] = problem.u1[s];
    }
}

namespace {

void require_boundary(const Problem& problem, const ScalarField& u)
{
    if (!(u.spec() == problem.spec)) fail(ErrorCode::Contract, "field grid does not match the problem grid");
    const auto slices = static_cast<std::size_t>(problem.spec.nt + 1);
    const auto v = u.values();
    for (std::size_t s = 0; s < problem.spec.space_points(); ++s)
        if (v[s * slices] != problem.u0[s] || v[s * slices + slices - 1] != problem.u1[s])
            fail(ErrorCode::Contract, "field does not match the Dirichlet data at " +
                                          describe(problem.spec, point_from_flat(problem.spec, s * slices)));
}

} // namespace

ScalarField residual(const Problem& problem, const ScalarField& u)
{
    require_boundary(problem, u);
    const GridSpec& spec = problem.spec;
    std::vector<double> r(spec.size(), 0.0);
    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        r[flat_index(spec, p)] = f_value(problem.kind, jet_at(u, p)) - problem.eps;
    });
    return ScalarField(spec, std::move(r));
}

ScalarField jacobian_apply(const Problem& problem, const ScalarField& u, const ScalarField& w)
{
    const GridSpec& spec = problem.spec;
    if (!(w.spec() == spec) || !(u.spec() == spec)) fail(ErrorCode::Contract, "field grids differ");
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    for (std::size_t s = 0; s < spec.space_points(); ++s)
        if (w.values()[s * slices] != 0.0 || w.values()[s * slices + slices - 1] != 0.0)
            fail(ErrorCode::Contract, "direction w must vanish on the Dirichlet slices");
    std::vector<double> out(spec.size(), 0.0);
    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        const Mat g = grad_F(problem.kind, jet_at(u, p));
        const Mat dw = hessian_at(spec, w.values(), p);
        out[flat_index(spec, p)] = g.cwiseProduct(dw).sum();
    });
    return ScalarField(spec, std::move(out));
}

std::size_t interior_unknowns(const GridSpec& spec)
{
    return spec.space_points() * static_cast<std::size_t>(spec.nt - 1);
}

std::size_t interior_index(const GridSpec& spec, const GridPoint& p)
{
    const std::size_t flat = flat_index(spec, p);
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    return (flat / slices) * static_cast<std::size_t>(spec.nt - 1) + static_cast<std::size_t>(p.k - 1);
}

Eigen::SparseMatrix<double> assemble_jacobian(const Problem& problem, std::span<const double> u)
{
    const GridSpec& spec = problem.spec;
    const int d = spec.n + 1;
    const int t = spec.n;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(interior_unknowns(spec) * static_cast<std::size_t>(1 + 2 * d + 2 * d * (d - 1)));

    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        const auto row = static_cast<Eigen::Index>(interior_index(spec, p));
        const Mat g = grad_F(problem.kind, jet_at(spec, u, p));
        auto add = [&](GridPoint q, double weight) {
            if (q.k < 1 || q.k > spec.nt - 1 || weight == 0.0) return;
            trip.emplace_back(row, static_cast<Eigen::Index>(interior_index(spec, q)), weight);
        };
        auto shift = [&](GridPoint q, int axis, int delta) {
            if (axis == t)
                q.k += delta;
            else
                q.i[static_cast<std::size_t>(axis)] += delta;
            return q;
        };
        for (int a = 0; a < d; ++a) {
            const double ha = spec.step(a);
            const double wa = g(a, a) / (ha * ha);
            add(p, -2.0 * wa);
            add(shift(p, a, +1), wa);
            add(shift(p, a, -1), wa);
            for (int b = a + 1; b < d; ++b) {
                const double wab = 2.0 * g(a, b) / (4.0 * ha * spec.step(b));
                add(shift(shift(p, a, +1), b, +1), wab);
                add(shift(shift(p, a, -1), b, -1), wab);
                add(shift(shift(p, a, +1), b, -1), -wab);
                add(shift(shift(p, a, -1), b, +1), -wab);
            }
        }
    });
    const auto nu = static_cast<Eigen::Index>(interior_unknowns(spec));
    Eigen::SparseMatrix<double> j(nu, nu);
    j.setFromTriplets(trip.begin(), trip.end());
    return j;
}

} // namespace maxrank

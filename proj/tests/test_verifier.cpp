#include "doctest.h"

#include "maxrank/error.hpp"
#include "maxrank/solver.hpp"
#include "maxrank/verifier.hpp"

#include <cmath>
#include <numbers>

using namespace maxrank;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> slice(const GridSpec& g, double c, double a)
{
    std::vector<double> v(g.space_points());
    const auto slices = static_cast<std::size_t>(g.nt + 1);
    for (std::size_t s = 0; s < v.size(); ++s)
        v[s] = c + a * std::cos(2 * kPi * coordinates(g, point_from_flat(g, s * slices))(0));
    return v;
}

// discrete symbol of the centred second difference applied to cos(2 pi x)
double symbol(double h) { return 4.0 * std::sin(kPi * h) * std::sin(kPi * h) / (h * h); }

} // namespace

TEST_CASE("boundary_lambda equals the discrete symbol bound")
{
    const GridSpec g = build_grid(2, 16, 16);
    const double a0 = 0.01, a1 = 0.02;
    const Problem p = make_problem(OperatorKind::MongeAmpere, g, 1.0, slice(g, 0.0, a0), slice(g, 1.0, a1));
    CHECK(boundary_lambda(p) == doctest::Approx(1.0 - a1 * symbol(g.hx)).epsilon(1e-12));
}

TEST_CASE("default theorem tolerance is 5 h^2")
{
    CHECK(default_theorem_tol(build_grid(2, 32, 16)) == doctest::Approx(5.0 / 256));
    CHECK(default_theorem_tol(build_grid(2, 16, 32)) == doctest::Approx(5.0 / 256));
}

TEST_CASE("check_theorems on the trivial solution")
{
    for (int n = 1; n <= 3; ++n) {
        const GridSpec g = build_grid(n, 8, 8);
        const Problem p = make_problem(OperatorKind::Donaldson, g, 2.0 * n, std::vector<double>(g.space_points(), 1.0),
                                       std::vector<double>(g.space_points(), 2.0));
        const ScalarField u = sample(g, [](const Vec&, double t) { return 1.0 + t * t; });
        const RankReport r = check_theorems(u, p);
        CHECK(r.mu0 == doctest::Approx(1.0));
        CHECK(r.lambda_boundary == doctest::Approx(1.0));
        REQUIRE(r.rank_histogram.size() == 1);
        CHECK(r.rank_histogram.begin()->first == n);
        CHECK(r.rank_histogram.begin()->second == r.interior_points);
        CHECK(r.interior_points == g.space_points() * 7);
        CHECK(r.lower_bound_pass);
        CHECK(r.constant_rank_pass);
        CHECK(r.strict_pass);
        CHECK(r.lower_bound_applies == (n <= 2));
        CHECK(r.all_applicable_pass());
    }
}

TEST_CASE("check_theorems detects a rank drop")
{
    const GridSpec g = build_grid(2, 16, 8);
    const double a = 1.0 / symbol(g.hx);  // first eigenvalue 1 - cos(2 pi x) vanishes at x = 0
    const Problem p = make_problem(OperatorKind::Donaldson, g, 1.0, slice(g, 0.0, a), slice(g, 1.0, a));
    const ScalarField u = sample(g, [&](const Vec& x, double t) { return a * std::cos(2 * kPi * x(0)) + t * t; });
    const RankReport r = check_theorems(u, p);
    CHECK(std::abs(r.mu0) < 1e-12);
    CHECK(r.argmin.i[0] == 0);
    CHECK(r.rank_histogram.size() == 2);
    CHECK(r.rank_histogram.at(1) == 16u * 7u);
    CHECK_FALSE(r.constant_rank_pass);
    CHECK_FALSE(r.strict_pass);
    CHECK(r.lower_bound_pass);
    CHECK_FALSE(r.all_applicable_pass());
}

TEST_CASE("applicability flags by operator and dimension")
{
    for (int n = 1; n <= 3; ++n)
        for (OperatorKind kind : {OperatorKind::MongeAmpere, OperatorKind::Donaldson}) {
            const GridSpec g = build_grid(n, 8, 8);
            const Problem p = make_problem(kind, g, 2.0, std::vector<double>(g.space_points(), 1.0),
                                           std::vector<double>(g.space_points(), 2.0));
            const ScalarField u = sample(g, [](const Vec&, double t) { return 1.0 + t * t; });
            const RankReport r = check_theorems(u, p);
            CHECK(r.lower_bound_applies == (n <= 2));
            CHECK(r.constant_rank_applies == (kind == OperatorKind::Donaldson));
            CHECK(r.strict_applies);
        }
}

TEST_CASE("check_theorems rejects a mismatched grid")
{
    const GridSpec g = build_grid(1, 8, 8);
    const GridSpec h = build_grid(1, 16, 8);
    const Problem p = make_problem(OperatorKind::Donaldson, g, 2.0, std::vector<double>(8, 1.0),
                                   std::vector<double>(8, 2.0));
    const ScalarField u = sample(h, [](const Vec&, double t) { return 1.0 + t * t; });
    CHECK_THROWS_AS(check_theorems(u, p), Error);
    CHECK_THROWS_AS(key_estimate_probe(u, p, 1), Error);
}

TEST_CASE("key-estimate probe")
{
    SUBCASE("trivial solution: phi vanishes identically")
    {
        const GridSpec g = build_grid(3, 8, 8);
        const Problem p = make_problem(OperatorKind::Donaldson, g, 6.0, std::vector<double>(g.space_points(), 1.0),
                                       std::vector<double>(g.space_points(), 2.0));
        const ScalarField u = sample(g, [](const Vec&, double t) { return 1.0 + t * t; });
        const ProbeReport r = key_estimate_probe(u, p, 3);
        CHECK(r.probe_points == g.space_points() * 5);
        CHECK(r.samples.size() == (r.probe_points + 99) / 100);
        CHECK_FALSE(r.insufficient);
        for (const auto& s : r.samples) {
            CHECK(std::abs(s.phi) < 1e-12);
            CHECK(std::abs(s.ratio) < 1e-3);
        }
        CHECK_THROWS_AS(key_estimate_probe(u, p, 0), Error);
        CHECK_THROWS_AS(key_estimate_probe(u, p, 4), Error);
    }
    SUBCASE("solved MA instance")
    {
        const GridSpec g = build_grid(2, 16, 16);
        const Problem p = make_problem(OperatorKind::MongeAmpere, g, 0.5, slice(g, 0.0, 0.01), slice(g, 1.0, 0.01));
        const SolveResult s = newton_solve(p, {}, initial_guess(p));
        REQUIRE(s.report.converged);
        const ProbeReport r = key_estimate_probe(s.u, p, 2);
        CHECK(r.samples.size() == std::max<std::size_t>(10, (r.probe_points + 99) / 100));
        for (std::size_t i = 1; i < r.samples.size(); ++i) CHECK(r.samples[i - 1].phi <= r.samples[i].phi);
        CHECK(std::isfinite(r.sup_ratio));
        CHECK(r.global_sup_ratio >= r.sup_ratio);
        CHECK(r.mu0 > 0.0);
    }
}

#include "doctest.h"

#include "maxrank/error.hpp"
#include "maxrank/operators.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace maxrank;

namespace {

Jet2 jet_from_hess(const Mat& h)
{
    Jet2 j;
    j.grad = Vec::Zero(h.rows());
    j.hess = h;
    return j;
}

// D^2 u with M = D^2 u + I' symmetric positive definite
Mat random_cone_hess(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    const int d = n + 1;
    Mat a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = u(rng);
    Mat m = a * a.transpose() + 0.3 * Mat::Identity(d, d);
    for (int i = 0; i < n; ++i) m(i, i) -= 1.0;
    return m;
}

double sq(double x) { return x * x; }

} // namespace

TEST_CASE("operator names")
{
    CHECK(operator_from_string("ma") == OperatorKind::MongeAmpere);
    CHECK(operator_from_string("donaldson") == OperatorKind::Donaldson);
    CHECK(to_string(OperatorKind::MongeAmpere) == "ma");
    CHECK_THROWS_AS(operator_from_string("laplace"), Error);
}

TEST_CASE("f_value closed forms")
{
    Mat h(3, 3);
    h << 0.2, 0.1, 0.3, 0.1, -0.4, 0.05, 0.3, 0.05, 1.7;
    const Jet2 j = jet_from_hess(h);
    const double lap = h(0, 0) + h(1, 1);
    CHECK(f_value(OperatorKind::Donaldson, j) ==
          doctest::Approx(h(2, 2) * (2.0 + lap) - sq(h(0, 2)) - sq(h(1, 2))));
    Mat m = h;
    m(0, 0) += 1.0;
    m(1, 1) += 1.0;
    CHECK(f_value(OperatorKind::MongeAmpere, j) == doctest::Approx(Eigen::MatrixXd(m).determinant()));

    // n = 1: both operators are det M
    Mat h1(2, 2);
    h1 << 0.3, -0.2, -0.2, 0.9;
    const Jet2 j1 = jet_from_hess(h1);
    CHECK(f_value(OperatorKind::Donaldson, j1) == doctest::Approx(f_value(OperatorKind::MongeAmpere, j1)));
}

TEST_CASE("grad_F and hess_F against central differences")
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (OperatorKind kind : {OperatorKind::MongeAmpere, OperatorKind::Donaldson})
        for (int rep = 0; rep < 60; ++rep) {
            const int n = 1 + rep % 3;
            const int d = n + 1;
            const Mat m = shifted_hessian(jet_from_hess(random_cone_hess(rng, n)));
            const Mat g = grad_matrix(kind, m);
            const Tensor4 t = hess_matrix(kind, m);
            // entries are independent: perturb one at a time
            const double h = 1e-4;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    Mat p = m, q = m;
                    p(a, b) += h;
                    q(a, b) -= h;
                    const double fd = (f_matrix(kind, p) - f_matrix(kind, q)) / (2 * h);
                    CHECK(g(a, b) == doctest::Approx(fd).epsilon(1e-7));
                    const Mat gd = (grad_matrix(kind, p) - grad_matrix(kind, q)) / (2 * h);
                    for (int c = 0; c < d; ++c)
                        for (int e = 0; e < d; ++e) CHECK(std::abs(t(a, b, c, e) - gd(c, e)) < 1e-7);
                }
        }
}

TEST_CASE("Donaldson derivative convention")
{
    Mat m = Mat::Identity(3, 3);
    const Tensor4 t = hess_matrix(OperatorKind::Donaldson, m);
    CHECK(t(0, 2, 2, 0) == -1.0);
    CHECK(t(2, 0, 0, 2) == -1.0);
    CHECK(t(0, 2, 0, 2) == 0.0);
    CHECK(t(0, 0, 2, 2) == 1.0);
    CHECK(t(0, 0, 1, 1) == 0.0);
    const Mat g = grad_matrix(OperatorKind::Donaldson, m);
    CHECK(g(2, 2) == doctest::Approx(2.0));  // sum_j M_jj
    CHECK(g(0, 0) == doctest::Approx(1.0));  // M_tt
}

TEST_CASE("Tensor4 has pair symmetry and grad_F is symmetric at symmetric M")
{
    std::mt19937_64 rng(5);
    for (OperatorKind kind : {OperatorKind::MongeAmpere, OperatorKind::Donaldson}) {
        const Jet2 j = jet_from_hess(random_cone_hess(rng, 3));
        const Tensor4 t = hess_F(kind, j);
        const Mat g = grad_F(kind, j);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                for (int c = 0; c < 4; ++c)
                    for (int e = 0; e < 4; ++e) CHECK(t(a, b, c, e) == doctest::Approx(t(c, e, a, b)));
    }
}

TEST_CASE("cone_check")
{
    Mat h = Mat::Zero(3, 3);
    h(2, 2) = 1.0;
    CHECK(cone_check(OperatorKind::MongeAmpere, jet_from_hess(h)).inside);
    CHECK(cone_check(OperatorKind::MongeAmpere, jet_from_hess(h)).margin == doctest::Approx(1.0));
    h(0, 0) = -1.5;
    CHECK_FALSE(cone_check(OperatorKind::MongeAmpere, jet_from_hess(h)).inside);
    // Donaldson: n + Lap u = 0.5 > 0 but F = 1 * 0.5 - 1 < 0
    h(0, 0) = -1.5;
    h(0, 2) = h(2, 0) = 1.0;
    const ConeStatus s = cone_check(OperatorKind::Donaldson, jet_from_hess(h));
    CHECK_FALSE(s.inside);
    CHECK(s.margin == doctest::Approx(-0.5));
}

TEST_CASE("make_problem validation")
{
    const GridSpec g = build_grid(1, 8, 8);
    std::vector<double> ok(8, 0.0), bad(7, 0.0);
    CHECK_THROWS_AS(make_problem(OperatorKind::Donaldson, g, 0.0, ok, ok), Error);
    CHECK_THROWS_AS(make_problem(OperatorKind::Donaldson, g, 1.0, ok, bad), Error);
    std::vector<double> nan = ok;
    nan[3] = NAN;
    CHECK_THROWS_AS(make_problem(OperatorKind::Donaldson, g, 1.0, nan, ok), Error);
}

TEST_CASE("residual vanishes on discrete-exact solutions")
{
    for (int n = 1; n <= 3; ++n) {
        const GridSpec g = build_grid(n, 8, 8);
        const Problem p = make_problem(OperatorKind::Donaldson, g, 2.0 * n, std::vector<double>(g.space_points(), 1.0),
                                       std::vector<double>(g.space_points(), 2.0));
        const ScalarField u = sample(g, [](const Vec&, double t) { return 1.0 + t * t; });
        const ScalarField r = residual(p, u);
        for (double v : r.values()) CHECK(std::abs(v) < 1e-12);

        // MA: det = u_tt = eps for u = (eps/2) t^2
        const double eps = 0.3;
        const Problem q = make_problem(OperatorKind::MongeAmpere, g, eps, std::vector<double>(g.space_points(), 0.0),
                                       std::vector<double>(g.space_points(), eps / 2));
        const ScalarField w = sample(g, [&](const Vec&, double t) { return eps / 2 * t * t; });
        const ScalarField rq = residual(q, w);
        for (double v : rq.values()) CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("Jacobian: assembled matrix, matrix-free product and directional derivative agree")
{
    const GridSpec g = build_grid(2, 8, 8);
    auto boundary = [&](double c, double a) {
        std::vector<double> v(g.space_points());
        for (std::size_t s = 0; s < v.size(); ++s) {
            const Vec x = coordinates(g, point_from_flat(g, s * 9));
            v[s] = c + a * std::cos(2 * std::numbers::pi * x(0)) * std::cos(2 * std::numbers::pi * x(1));
        }
        return v;
    };
    for (OperatorKind kind : {OperatorKind::MongeAmpere, OperatorKind::Donaldson}) {
        const Problem p = make_problem(kind, g, 1.0, boundary(0.0, 0.01), boundary(1.0, 0.01));
        const ScalarField u = sample(g, [](const Vec& x, double t) {
            return 0.01 * std::cos(2 * std::numbers::pi * x(0)) * std::cos(2 * std::numbers::pi * x(1)) + t +
                   0.7 * (t * t - t);
        });
        const ScalarField w = sample(g, [](const Vec& x, double t) {
            return std::sin(2 * std::numbers::pi * (x(0) + 2 * x(1))) * t * (1 - t);
        });
        const auto j = assemble_jacobian(p, u.values());
        REQUIRE(j.rows() == static_cast<Eigen::Index>(interior_unknowns(g)));
        Eigen::VectorXd wi(j.cols());
        for_each_point(g, 1, g.nt - 1, [&](const GridPoint& q) {
            wi(static_cast<Eigen::Index>(interior_index(g, q))) = w.at(q);
        });
        const Eigen::VectorXd jw = j * wi;
        const ScalarField free = jacobian_apply(p, u, w);

        const double s = 1e-6;
        std::vector<double> up(u.values().begin(), u.values().end()), um = up;
        for (std::size_t f = 0; f < up.size(); ++f) {
            up[f] += s * w.values()[f];
            um[f] -= s * w.values()[f];
        }
        const ScalarField rp = residual(p, ScalarField(g, up));
        const ScalarField rm = residual(p, ScalarField(g, um));
        for_each_point(g, 1, g.nt - 1, [&](const GridPoint& q) {
            const double a = jw(static_cast<Eigen::Index>(interior_index(g, q)));
            CHECK(a == doctest::Approx(free.at(q)).epsilon(1e-12));
            CHECK(a == doctest::Approx((rp.at(q) - rm.at(q)) / (2 * s)).epsilon(1e-6));
        });
    }
}

TEST_CASE("Jacobian symmetry: exact for constant coefficients, small otherwise")
{
    const GridSpec g = build_grid(2, 8, 8);
    const std::size_t sp = g.space_points();
    const Problem p = make_problem(OperatorKind::Donaldson, g, 4.0, std::vector<double>(sp, 1.0),
                                   std::vector<double>(sp, 2.0));
    const ScalarField quad = sample(g, [](const Vec&, double t) { return 1.0 + t * t; });
    Eigen::SparseMatrix<double> j = assemble_jacobian(p, quad.values());
    Eigen::SparseMatrix<double> d = j - Eigen::SparseMatrix<double>(j.transpose());
    CHECK(d.norm() <= 1e-12 * j.norm());

    // variable coefficients: the stencil is symmetric up to O(h) coefficient variation
    const ScalarField u = sample(g, [](const Vec& x, double t) {
        return 0.01 * std::cos(2 * std::numbers::pi * x(0)) + 1.0 + t * t;
    });
    j = assemble_jacobian(p, u.values());
    d = j - Eigen::SparseMatrix<double>(j.transpose());
    CHECK(d.norm() < 0.1 * j.norm());
}

TEST_CASE("interior_index is a bijection onto 0..N-1")
{
    const GridSpec g = build_grid(2, 8, 8);
    std::vector<int> hit(interior_unknowns(g), 0);
    for_each_point(g, 1, g.nt - 1, [&](const GridPoint& q) { hit[interior_index(g, q)]++; });
    for (int h : hit) CHECK(h == 1);
}

#include "maxrank/identity_lab.hpp"

#include "maxrank/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace maxrank {

std::string to_string(SampleMode m) { return m == SampleMode::Exact ? "exact" : "scaled"; }

Jet2 JetSample::jet() const
{
    Jet2 j;
    j.value = 0.0;
    j.grad = Vec::Zero(n + 1);
    j.hess = Mat::Zero(n + 1, n + 1);
    for (int i = 0; i < n; ++i) {
        j.hess(i, i) = u_ii(i);
        j.hess(i, n) = u_t(i);
        j.hess(n, i) = u_t(i);
    }
    j.hess(n, n) = u_tt;
    return j;
}

SampleOptions default_sample_options(OperatorKind kind, int num_good)
{
    SampleOptions o;
    if (kind == OperatorKind::Donaldson) {
        o.mu0_lo = num_good == 0 ? 0.05 : 0.0;
        o.mu0_hi = num_good == 0 ? 0.5 : 0.0;
    }
    return o;
}

namespace {

constexpr int kMaxAttempts = 100;
constexpr double kPivotFloor = 1e-4;

double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool is_bad(const JetSample& s, int i)
{
    return i < s.n && std::find(s.bad.begin(), s.bad.end(), i) != s.bad.end();
}

// One draw of the free data; returns false when a closure pivot is too small.
bool draw(JetSample& s, std::mt19937_64& rng, const SampleOptions& o)
{
    const int n = s.n;
    const int t = n;
    const bool exact = s.mode == SampleMode::Exact;

    s.mu0 = o.mu0_lo + (o.mu0_hi - o.mu0_lo) * uniform01(rng);
    s.eps = o.eps_lo + (o.eps_hi - o.eps_lo) * uniform01(rng);
    s.lambda = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        const double r = uniform01(rng);
        if (is_bad(s, i))
            s.lambda(i) = exact ? 0.0 : s.delta * (1.0 - r);
        else
            s.lambda(i) = 0.5 + 1.5 * r;
    }
    s.u_t = Vec::Zero(n);
    for (int i = 0; i < n; ++i) s.u_t(i) = 2.0 * uniform01(rng) - 1.0;

    s.third = Jet3(n + 1);
    for (int a = 0; a <= n; ++a)
        for (int b = a; b <= n; ++b)
            for (int c = b; c <= n; ++c) {
                double v = 2.0 * uniform01(rng) - 1.0;
                // Entries u_ij* with two bad space indices.
                const int bad_count = is_bad(s, a) + is_bad(s, b) + is_bad(s, c);
                if (bad_count >= 2) v = exact ? 0.0 : s.delta * v;
                s.third.set(a, b, c, v);
            }

    // Equation closure for u_tt.
    double pivot = 0.0;
    if (s.kind == OperatorKind::MongeAmpere) {
        double det_a = 1.0, schur = 0.0;
        for (int i = 0; i < n; ++i) {
            det_a *= s.w(i);
            if (s.w(i) <= 0.0) return false;
        }
        if (det_a < kPivotFloor) return false;
        for (int i = 0; i < n; ++i) schur += s.u_t(i) * s.u_t(i) / s.w(i);
        s.u_tt = s.eps / det_a + schur;
        pivot = det_a;
    } else {
        double lap = 0.0, cross = 0.0;
        for (int i = 0; i < n; ++i) {
            lap += s.w(i);
            cross += s.u_t(i) * s.u_t(i);
        }
        if (lap < kPivotFloor) return false;
        s.u_tt = (s.eps + cross) / lap;
        pivot = lap;
    }

    // Differentiated equation closure for u_ttm, m bad.
    const Mat f = grad_F(s.kind, s.jet());
    if (!(std::abs(f(t, t)) >= kPivotFloor) || !(pivot > 0.0)) return false;
    for (int m : s.bad) {
        double rest = 0.0;
        for (int a = 0; a <= n; ++a)
            for (int b = 0; b <= n; ++b)
                if (a != t || b != t) rest += f(a, b) * s.third(a, b, m);
        s.third.set(t, t, m, -rest / f(t, t));
    }
    return true;
}

void require(bool ok, const std::string& what)
{
    if (!ok) fail(ErrorCode::Precondition, what);
}

int sole_good(const JetSample& s)
{
    require(s.kind == OperatorKind::MongeAmpere, "check requires the Monge-Ampere kind");
    require(s.good.size() == 1, "check requires exactly one good direction");
    return s.good.front();
}

double contract_pair(const Mat& f, const std::vector<double>& x, const std::vector<double>& y)
{
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a)
        for (std::size_t b = 0; b < y.size(); ++b) s += f(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * x[a] * y[b];
    return s;
}

std::vector<double> row(const JetSample& s, int i, int j)
{
    std::vector<double> r(static_cast<std::size_t>(s.n + 1));
    for (int a = 0; a <= s.n; ++a) r[static_cast<std::size_t>(a)] = s.third(i, j, a);
    return r;
}

double z_value(const JetSample& s, const Tensor4& h, int m)
{
    const int d = s.n + 1;
    Mat x(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) x(a, b) = s.third(a, b, m);
    return h.contract(x, x);
}

void finish(LemmaResult& r)
{
    r.discrepancy = 0.0;
    for (const auto& v : r.per_m) r.discrepancy = std::max(r.discrepancy, v.discrepancy);
}

} // namespace

JetSample sample_jet(int n, int num_good, OperatorKind kind, SampleMode mode, double delta, std::uint64_t seed,
                     const SampleOptions& options)
{
    const int n_max = options.wide ? 4 : 3;
    if (n < 1 || n > n_max) fail(ErrorCode::Config, "sample dimension n must lie in [1," + std::to_string(n_max) + "]");
    if (num_good < 0 || num_good > n) fail(ErrorCode::Config, "number of good directions must lie in [0, n]");
    if (mode == SampleMode::Scaled && !(delta > 0.0 && delta <= 0.1))
        fail(ErrorCode::Config, "scaled mode needs delta in (0, 0.1]");
    if (!(options.mu0_lo >= 0.0 && options.mu0_hi >= options.mu0_lo))
        fail(ErrorCode::Config, "mu0 range must be non-negative and ordered");
    if (!(options.eps_lo > 0.0 && options.eps_hi >= options.eps_lo))
        fail(ErrorCode::Config, "epsilon range must be positive and ordered");

    JetSample s;
    s.n = n;
    s.kind = kind;
    s.mode = mode;
    s.delta = mode == SampleMode::Exact ? 0.0 : delta;
    s.seed = seed;
    for (int i = 0; i < n; ++i) (i < num_good ? s.good : s.bad).push_back(i);

    std::mt19937_64 rng(seed);
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        s.attempts = attempt;
        if (draw(s, rng, options)) return s;
    }
    fail(ErrorCode::Degenerate, "sample_jet: closure pivot vanished in " + std::to_string(kMaxAttempts) +
                                    " draws (seed " + std::to_string(seed) + ")");
}

JetSample sample_jet(int n, int num_good, OperatorKind kind, SampleMode mode, double delta, std::uint64_t seed)
{
    return sample_jet(n, num_good, kind, mode, delta, seed, default_sample_options(kind, num_good));
}

double rel_discrepancy(double lhs, double rhs) { return std::abs(lhs - rhs) / (1.0 + std::abs(lhs)); }

LemmaResult check_ma_lemma1(const JetSample& s)
{
    const int g = sole_good(s);
    const int t = s.n;
    const Jet2 jet = s.jet();
    const Mat f = grad_F(s.kind, jet);
    const Tensor4 h = hess_F(s.kind, jet);
    const double mgg = s.w(g);

    LemmaResult r;
    for (int m : s.bad) {
        const auto x = row(s, m, g);
        LemmaValue v;
        v.m = m;
        v.lhs = contract_pair(f, x, x);
        double first = h(t, t, g, g) * s.third(t, g, m) * s.third(t, g, m);
        for (int i : s.bad) first += 2.0 * h(i, t, g, g) * s.third(m, g, i) * s.third(m, g, t);
        double second = 0.0;
        for (int a = 0; a <= t; ++a)
            for (int b = 0; b <= t; ++b)
                if (a != g && b != g) second += h(a, b, g, g) * s.third(m, g, g) * s.third(a, b, m);
        v.rhs = mgg * first - mgg * second;
        v.discrepancy = rel_discrepancy(v.lhs, v.rhs);
        r.per_m.push_back(v);
    }
    finish(r);
    return r;
}

LemmaResult check_ma_lemma2(const JetSample& s)
{
    const int g = sole_good(s);
    const int t = s.n;
    const Tensor4 h = hess_F(s.kind, s.jet());

    LemmaResult r;
    for (int m : s.bad) {
        LemmaValue v;
        v.m = m;
        v.lhs = z_value(s, h, m);
        double first = 0.0;
        for (int a = 0; a <= t; ++a)
            for (int b = 0; b <= t; ++b) first += h(a, b, g, g) * s.third(a, b, m) * s.third(g, g, m);
        double second = h(t, t, g, g) * s.third(t, m, g) * s.third(t, m, g);
        for (int i : s.bad) second += 2.0 * h(i, t, g, g) * s.third(i, g, m) * s.third(g, t, m);
        v.rhs = 2.0 * first - 2.0 * second;
        v.discrepancy = rel_discrepancy(v.lhs, v.rhs);
        r.per_m.push_back(v);
    }
    finish(r);
    return r;
}

Lemma3Result check_ma_lemma3(const JetSample& s)
{
    const int g = sole_good(s);
    const Jet2 jet = s.jet();
    const Mat f = grad_F(s.kind, jet);
    const Tensor4 h = hess_F(s.kind, jet);
    const double mgg = s.w(g);

    Lemma3Result r;
    for (int m : s.bad) {
        const auto x = row(s, m, g);
        const double lhs = contract_pair(f, x, x);
        const double z = z_value(s, h, m);
        r.z.push_back(z);
        r.proxy.push_back(s.mu0 * z);
        r.corrected.per_m.push_back({m, lhs, -0.5 * mgg * z, rel_discrepancy(lhs, -0.5 * mgg * z)});
        r.literal.per_m.push_back({m, lhs, -mgg * z, rel_discrepancy(lhs, -mgg * z)});
        if (z > 1e-12) r.sign_ok = false;
        if (s.mu0 * z > 1e-12) r.proxy_ok = false;
    }
    finish(r.corrected);
    finish(r.literal);
    r.discrepancy = r.corrected.discrepancy;
    return r;
}

KEqualsNResult check_ma_K_equals_n(const JetSample& s)
{
    require(s.kind == OperatorKind::MongeAmpere, "check requires the Monge-Ampere kind");
    require(s.good.empty(), "check requires every direction to be bad");
    const int n = s.n;
    const int t = n;
    const Jet2 jet = s.jet();
    const Mat f = grad_F(s.kind, jet);
    const Tensor4 h = hess_F(s.kind, jet);

    KEqualsNResult r;
    r.ftt = f(t, t);
    for (int p = 0; p <= n; ++p) r.expansion += sigma_k(s.lambda, n - p) * std::pow(s.mu0, p);
    r.expansion_discrepancy = rel_discrepancy(r.ftt, r.expansion);
    r.discrepancy = r.expansion_discrepancy;
    for (int m : s.bad) {
        double d = 0.0;
        for (int a = 0; a <= t; ++a)
            for (int b = 0; b <= t; ++b) d += h(t, t, a, b) * s.third(a, b, m);
        r.dm_ftt.push_back(d);
        r.discrepancy = std::max(r.discrepancy, std::abs(d));
    }
    return r;
}

QFormsResult q_forms(const JetSample& s)
{
    require(s.kind == OperatorKind::Donaldson, "Q forms require the Donaldson kind");
    require(s.good.size() <= 3, "Q forms need at most three good directions");
    require(!s.good.empty() || s.mu0 > 0.0 || s.mode == SampleMode::Scaled,
            "without good directions n + Lap u > 0 needs mu0 > 0");
    require(s.good.empty() || s.mu0 == 0.0, "Q forms assume mu0 = 0");

    const int n = s.n;
    const int t = n;
    const auto& G = s.good;
    const double a = s.u_tt;
    const Vec& p = s.u_t;
    double big_n = 0.0;
    for (int i = 0; i < n; ++i) big_n += s.w(i);
    const double an = a * big_n;
    auto T = [&](int x, int y, int z) { return s.third(x, y, z); };
    auto w = [&](int i) { return s.w(i); };

    QFormsResult out;
    for (int m : s.bad) {
        QTerms q;
        q.m = m;
        double lap_m = 0.0, pt = 0.0;
        for (int j = 0; j < n; ++j) {
            lap_m += T(j, j, m);
            pt += p(j) * T(t, j, m);
        }
        const double uttm = T(t, t, m);

        double sum_jk_sq = 0.0, sum_jk_cross = 0.0, sum_ktm = 0.0, sum_mjt = 0.0;
        for (int j : G) {
            sum_ktm += T(j, t, m) * T(j, t, m);
            sum_mjt += T(m, j, t) * T(m, j, t) / w(j);
            for (int k : G) {
                sum_jk_sq += T(m, j, k) * T(m, j, k) / w(j);
                sum_jk_cross += p(k) * T(t, j, m) * T(m, j, k) / w(j);
            }
        }
        q.q_a = uttm * lap_m - sum_ktm + a * sum_jk_sq + big_n * sum_mjt - 2.0 * sum_jk_cross;

        q.a = -a * lap_m * lap_m / big_n + a * sum_jk_sq;
        q.b = 2.0 / big_n * lap_m * pt - 2.0 * sum_jk_cross;
        q.c = 0.0;
        for (int j : G) q.c += T(m, j, t) * T(m, j, t) * (big_n / w(j) - 1.0);
        q.q_abc = q.a + q.b + q.c;

        // Off-diagonal pair sums over good j != k.
        double a_sq = 0.0, a_off = 0.0, b_pair = 0.0, e_cross = 0.0, s1 = 0.0, d_sq = 0.0, d_exp = 0.0,
               s2 = 0.0;
        for (int j : G)
            for (int k : G) {
                if (j == k) continue;
                const double diff = w(k) * T(j, j, m) - w(j) * T(k, k, m);
                const double hop = p(k) * T(t, k, m) / w(k) - p(j) * T(t, j, m) / w(j);
                const double mix = p(k) * T(t, j, m) * w(k) + p(j) * T(t, k, m) * w(j);
                a_sq += diff * diff / (w(j) * w(k));
                a_off += T(m, j, k) * T(m, j, k) / w(j);
                b_pair += p(j) * T(t, j, m) / (w(j) * big_n) * diff;
                e_cross += p(k) * T(t, j, m) * T(m, j, k) / w(j);
                const double sq = std::sqrt(a / (w(j) * w(k) * big_n)) * diff +
                                  hop * std::sqrt(w(j) * w(k) / an);
                s1 += 0.5 * sq * sq;
                d_sq += 0.5 * w(j) * w(k) / an * hop * hop;
                d_exp += 0.5 / (w(j) * w(k) * an) * mix * mix;
                const double e_sq = T(m, j, k) * std::sqrt(an) - mix / std::sqrt(an);
                s2 += 0.5 * e_sq * e_sq / (w(j) * w(k));
            }
        double s3 = 0.0;
        for (int j : G) {
            double inner = 0.0;
            for (int k : G) {
                if (k == j) continue;
                double rest = s.eps;
                for (int l = 0; l < n; ++l)
                    if (l != j && l != k) rest += p(l) * p(l);
                inner += w(k) / w(j) * rest;
            }
            s3 += T(m, j, t) * T(m, j, t) / an * inner;
        }

        q.q_c = a * (a_sq / (2.0 * big_n) + a_off) - 2.0 * b_pair - 2.0 * e_cross + q.c;
        q.s1 = s1;
        q.d = -d_sq + q.c;
        q.e = a * a_off - 2.0 * e_cross;
        q.q_d = q.s1 + q.d + q.e;
        q.d_expanded = d_exp + s3;
        q.q_cd = q.s1 + q.d_expanded + q.e;
        q.s3 = s3;
        if (G.size() == 2) {
            q.s2 = s2;
            q.q_e = q.s1 + q.s2 + q.s3;
        } else {
            q.s2 = std::numeric_limits<double>::quiet_NaN();
            q.q_e = std::numeric_limits<double>::quiet_NaN();
        }

        auto pairwise = [](const std::vector<double>& v) {
            double worst = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i)
                for (std::size_t k = i + 1; k < v.size(); ++k)
                    worst = std::max(worst, std::abs(v[i] - v[k]) / (1.0 + std::max(std::abs(v[i]), std::abs(v[k]))));
            return worst;
        };
        std::vector<double> four{q.q_a, q.q_abc, q.q_cd};
        if (G.size() == 2) four.push_back(q.q_e);
        std::vector<double> all = four;
        all.push_back(q.q_c);
        all.push_back(q.q_d);
        out.max_pairwise = std::max(out.max_pairwise, pairwise(four));
        out.max_all = std::max(out.max_all, pairwise(all));
        out.per_m.push_back(q);
    }
    return out;
}

QNonnegResult check_q_nonneg(const JetSample& s)
{
    require(s.good.size() <= 2, "Q sign check needs at most two good directions");
    const QFormsResult forms = q_forms(s);
    QNonnegResult r;
    r.q_min = std::numeric_limits<double>::infinity();
    for (const auto& q : forms.per_m) {
        double value = 0.0, scale = 1.0;
        if (s.good.size() == 2) {
            value = q.q_e;
            scale += std::abs(q.s1) + std::abs(q.s2) + std::abs(q.s3);
            if (q.s1 < 0.0 || q.s2 < 0.0 || q.s3 < 0.0) r.groups_nonneg = false;
        } else {
            value = q.d_expanded;
            scale += std::abs(q.d_expanded);
        }
        r.q_min = std::min(r.q_min, value);
        if (value < -1e-12 * scale) r.nonneg = false;
    }
    if (forms.per_m.empty()) r.q_min = 0.0;
    return r;
}

QStarResult check_qstar_nonneg(const JetSample& s)
{
    require(s.kind == OperatorKind::Donaldson, "Q* requires the Donaldson kind");
    const Mat f = grad_F(s.kind, s.jet());
    QStarResult r;
    r.q_min = std::numeric_limits<double>::infinity();
    for (int m : s.bad) {
        double value = 0.0, scale = 1.0;
        for (int j : s.good) {
            const double weight = 1.0 / s.lambda(j) - 1.0 / s.w(j);
            require(weight >= 0.0, "Q* needs v_jj <= 1 + u_jj");
            const auto x = row(s, m, j);
            const double quad = contract_pair(f, x, x);
            value += weight * quad;
            scale += std::abs(weight * quad);
        }
        r.values.push_back(value);
        r.q_min = std::min(r.q_min, value);
        if (value < -1e-12 * scale) r.nonneg = false;
    }
    if (r.values.empty()) r.q_min = 0.0;
    return r;
}

VReport eval_V(const JetSample& s, double floor)
{
    require(s.kind == OperatorKind::Donaldson, "V requires the Donaldson kind");
    require(!s.bad.empty(), "V needs at least one bad direction");
    const int d = s.n + 1;
    VReport r;
    for (int i : s.bad) r.sigma1_b += s.lambda(i);
    require(r.sigma1_b >= floor, "V needs sigma_1(B) above the floor (exact mode is excluded)");

    const Mat f = grad_F(s.kind, s.jet());
    r.v = Mat::Zero(static_cast<Eigen::Index>(s.bad.size()), d);
    for (std::size_t row_i = 0; row_i < s.bad.size(); ++row_i) {
        const int i = s.bad[row_i];
        for (int a = 0; a < d; ++a) {
            double trace = 0.0;
            for (int j : s.bad) trace += s.third(j, j, a);
            r.v(static_cast<Eigen::Index>(row_i), a) = s.third(i, i, a) * r.sigma1_b - s.u_ii(i) * trace;
        }
    }

    std::vector<double> good_vals;
    for (int g : s.good) good_vals.push_back(s.lambda(g));
    const double sigma_g = sigma_k(good_vals, static_cast<int>(good_vals.size()));
    for (int m : s.bad) {
        std::vector<double> rest;
        for (int i : s.bad)
            if (i != m) rest.push_back(s.lambda(i));
        const double s1 = rest.empty() ? 0.0 : sigma_k(rest, 1);
        const double s2 = rest.size() >= 2 ? sigma_k(rest, 2) : 0.0;
        r.sigma1_b_m.push_back(s1);
        r.sigma2_b_m.push_back(s2);
        r.prefactor.push_back(sigma_g + (s1 * s1 - s2) / (r.sigma1_b * r.sigma1_b));
    }

    double vv = 0.0, cross = 0.0, scale = 1.0;
    for (Eigen::Index i = 0; i < r.v.rows(); ++i) {
        const Vec vi = r.v.row(i).transpose();
        const double q = vi.dot(f * vi);
        vv += q;
        scale += std::abs(q);
    }
    for (int i : s.bad)
        for (int j : s.bad) {
            if (i == j) continue;
            const auto x = row(s, i, j);
            const auto y = row(s, j, i);
            const double q = contract_pair(f, x, y);
            cross += q;
            scale += std::abs(q);
        }
    r.correction = vv / (r.sigma1_b * r.sigma1_b * r.sigma1_b) + cross / r.sigma1_b;
    r.correction_nonneg = r.correction >= -1e-12 * scale;
    return r;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::Contract, "slope fit needs matching series of length >= 2");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double k = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail(ErrorCode::Contract, "slope fit needs positive data");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

} // namespace maxrank

#include "maxrank/spectral.hpp"

#include "maxrank/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace maxrank {

Spectrum eig_sym(const Mat& m)
{
    const int d = static_cast<int>(m.rows());
    if (m.cols() != d) fail(ErrorCode::Contract, "eig_sym needs a square matrix");
    if (d > kMaxDim) fail(ErrorCode::Contract, "eig_sym supports d <= 5");
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (m(i, j) != m(j, i)) fail(ErrorCode::Contract, "eig_sym needs an exactly symmetric matrix");

    Mat a = m;
    Mat v = Mat::Identity(d, d);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-17 * scale) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
    Spectrum s;
    s.eigs.resize(d);
    s.vecs.resize(d, d);
    for (int c = 0; c < d; ++c) {
        const int src = order[static_cast<std::size_t>(c)];
        s.eigs(c) = a(src, src);
        s.vecs.col(c) = v.col(src);
    }
    return s;
}

double sigma_k(std::span<const double> vals, int k)
{
    const int n = static_cast<int>(vals.size());
    if (k < 0 || k > n) fail(ErrorCode::Contract, "sigma_k order " + std::to_string(k) + " outside [0," + std::to_string(n) + "]");
    // e[j] accumulates sigma_j of the prefix processed so far.
    std::vector<double> e(static_cast<std::size_t>(k + 1), 0.0);
    e[0] = 1.0;
    for (double x : vals)
        for (int j = k; j >= 1; --j) e[static_cast<std::size_t>(j)] += x * e[static_cast<std::size_t>(j - 1)];
    return e[static_cast<std::size_t>(k)];
}

double sigma_k(const Vec& vals, int k)
{
    return sigma_k(std::span<const double>(vals.data(), static_cast<std::size_t>(vals.size())), k);
}

namespace {

void check_bad_count(const Vec& eigs, int bad_count)
{
    if (bad_count < 1 || bad_count > eigs.size())
        fail(ErrorCode::Contract, "multiplicity K=" + std::to_string(bad_count) + " outside [1,n]");
}

} // namespace

double phi_plain(const Vec& eigs, int bad_count)
{
    check_bad_count(eigs, bad_count);
    return sigma_k(eigs, static_cast<int>(eigs.size()) - bad_count + 1);
}

double phi_corrected(const Vec& eigs, int bad_count, double floor)
{
    check_bad_count(eigs, bad_count);
    const int n = static_cast<int>(eigs.size());
    const double lead = sigma_k(eigs, n - bad_count + 1);
    if (lead < floor) return lead;
    // K = 1 has no sigma_{n+1}; the quotient is identically zero there.
    const double next = bad_count >= 2 ? sigma_k(eigs, n - bad_count + 2) : 0.0;
    return lead + next / lead;
}

RankPartition partition(const Vec& eigs, double threshold)
{
    if (!(threshold > 0)) fail(ErrorCode::Contract, "partition threshold must be positive");
    RankPartition p;
    p.threshold = threshold;
    for (int i = 0; i < eigs.size(); ++i) (eigs(i) < threshold ? p.bad : p.good).push_back(i);
    return p;
}

double default_threshold(const Vec& eigs)
{
    return 1e-6 * (1.0 + (eigs.size() ? eigs.maxCoeff() : 0.0));
}

} // namespace maxrank

#pragma once

#include "maxrank/linalg.hpp"

#include <span>
#include <vector>

namespace maxrank {

/// Eigenvalues ascending; columns of vecs are the matching orthonormal
/// eigenvectors.
struct Spectrum {
    Vec eigs;
    Mat vecs;
};

/// Cyclic Jacobi rotations, swept until the off-diagonal mass is below
/// machine precision. Requires an exactly symmetric matrix.
Spectrum eig_sym(const Mat& m);

/// k-th elementary symmetric polynomial; sigma_0 = 1.
double sigma_k(std::span<const double> vals, int k);
double sigma_k(const Vec& vals, int k);

/// sigma_{n-K+1}(eigs): vanishes as soon as K eigenvalues do.
double phi_plain(const Vec& eigs, int bad_count);

/// sigma_{n-K+1} + sigma_{n-K+2}/sigma_{n-K+1}; the quotient is dropped
/// (its limit is 0) when sigma_{n-K+1} < floor.
double phi_corrected(const Vec& eigs, int bad_count, double floor = 1e-12);

struct RankPartition {
    std::vector<int> good;
    std::vector<int> bad;
    double threshold = 0.0;
};

RankPartition partition(const Vec& eigs, double threshold);

/// 1e-6 * (1 + max eig), the default bad-eigenvalue cutoff.
double default_threshold(const Vec& eigs);

} // namespace maxrank

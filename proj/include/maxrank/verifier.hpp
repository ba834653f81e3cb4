#pragma once

#include "maxrank/grid.hpp"
#include "maxrank/operators.hpp"
#include "maxrank/spectral.hpp"

#include <map>
#include <optional>
#include <vector>

namespace maxrank {

/// Smallest eigenvalue of D_x^2 u + I_n over both Dirichlet slices.
double boundary_lambda(const GridSpec& spec, std::span<const double> u0, std::span<const double> u1);
inline double boundary_lambda(const Problem& p) { return boundary_lambda(p.spec, p.u0, p.u1); }

/// Per-point eigendecomposition of D_x^2 u + I_n, indexed by flat lattice
/// index. Entries are filled on every slice, boundary slices included.
struct SpectrumField {
    GridSpec spec;
    std::vector<Spectrum> spectra;

    const Spectrum& at(const GridPoint& p) const { return spectra[flat_index(spec, p)]; }
};

SpectrumField space_spectrum_field(const ScalarField& u);

struct VerifyOptions {
    /// Theorem tolerance; negative selects 5 h^2 with h = max(hx, ht).
    double tol = -1.0;
    /// Relative cutoff for zero eigenvalues in the rank count.
    double rank_rel_threshold = 1e-6;
};

double default_theorem_tol(const GridSpec& spec);

struct RankReport {
    double mu0 = 0.0;
    GridPoint argmin;
    double lambda_boundary = 0.0;
    double margin = 0.0;
    double tol = 0.0;
    std::map<int, std::size_t> rank_histogram;
    std::size_t interior_points = 0;

    bool lower_bound_pass = false;    // mu0 >= lambda_boundary - tol
    bool constant_rank_pass = false;  // single histogram bin
    bool strict_pass = false;         // mu0 > 0

    // Which statements the theory covers for this (operator, n).
    bool lower_bound_applies = false;
    bool constant_rank_applies = false;
    bool strict_applies = false;

    bool all_applicable_pass() const;
};

RankReport check_theorems(const ScalarField& u, const Problem& problem, const VerifyOptions& options = {});

struct ProbeSample {
    GridPoint point;
    double phi = 0.0;
    double grad_norm = 0.0;
    double linearized = 0.0;  // F^{ab} phi_ab
    double ratio = 0.0;
    double trace_f = 0.0;           // trace of F^{ab}
    double normalized_ratio = 0.0;  // ratio / trace_f
};

struct ProbeReport {
    int bad_count = 0;
    double mu0 = 0.0;
    double floor = 0.0;
    std::size_t probe_points = 0;
    std::vector<ProbeSample> samples;  // the 1% of probe points with smallest phi
    double sup_ratio = 0.0;            // over samples
    double sup_normalized_ratio = 0.0; // same with F^{ab} scaled to unit trace
    double global_sup_ratio = 0.0;     // over every probe point
    bool insufficient = false;
};

/// Builds phi = sigma_{n-K+1}(eigs of D_x^2 u + I_n - mu0 I_n), differentiates it
/// on slices 2..nt-2 and contracts its Hessian with F^{ab} at the jet of u.
ProbeReport key_estimate_probe(const ScalarField& u, const Problem& problem, int bad_count, double floor = 1e-12);

} // namespace maxrank

#pragma once

#include "maxrank/grid.hpp"
#include "maxrank/linalg.hpp"
#include "maxrank/operators.hpp"
#include "maxrank/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace maxrank {

enum class SampleMode { Exact, Scaled };

std::string to_string(SampleMode m);

/// Synthetic pointwise configuration in a frame where D_x^2 u is diagonal.
/// Space indices 0..n-1 are split into good ones (the first num_good) and bad
/// ones; index n is time.
struct JetSample {
    int n = 0;
    OperatorKind kind = OperatorKind::Donaldson;
    SampleMode mode = SampleMode::Exact;
    double delta = 0.0;
    std::uint64_t seed = 0;
    int attempts = 1;

    std::vector<int> good;
    std::vector<int> bad;
    double mu0 = 0.0;
    double eps = 1.0;
    Vec lambda;    // v_ii = u_ii + 1 - mu0
    double u_tt = 0.0;
    Vec u_t;       // u_tj
    Jet3 third;    // u_abc, dimension n + 1

    double u_ii(int i) const { return lambda(i) + mu0 - 1.0; }
    /// 1 + u_ii, the diagonal of M.
    double w(int i) const { return lambda(i) + mu0; }
    Jet2 jet() const;
    Mat m() const { return shifted_hessian(jet()); }
};

struct SampleOptions {
    /// mu0 is drawn uniformly from [mu0_lo, mu0_hi]. Use default_sample_options
    /// for the ranges each check family expects.
    double mu0_lo = 0.0;
    double mu0_hi = 0.5;
    double eps_lo = 0.05;
    double eps_hi = 1.0;
    /// Admit n = 4 (only the #G = 3 sign probe needs it).
    bool wide = false;
};

/// MongeAmpere: mu0 in [0, 0.5]. Donaldson: mu0 = 0, except #G = 0 where the
/// Laplacian pivot n + Lap u would vanish; there mu0 is drawn in [0.05, 0.5].
SampleOptions default_sample_options(OperatorKind kind, int num_good);

/// Deterministic per seed. Free data are drawn first in a fixed order, so a
/// scaled-mode ladder over delta reuses the same uniforms. Exact mode zeroes
/// bad eigenvalues and every u_ij* with i, j bad; scaled mode multiplies
/// those entries by delta. u_tt is then closed from the equation and u_ttm
/// (m bad) from the differentiated equation. Vanishing pivots resample, up to
/// 100 times.
JetSample sample_jet(int n, int num_good, OperatorKind kind, SampleMode mode, double delta, std::uint64_t seed,
                     const SampleOptions& options);
JetSample sample_jet(int n, int num_good, OperatorKind kind, SampleMode mode, double delta, std::uint64_t seed);

/// Relative discrepancy |lhs - rhs| / (1 + |lhs|).
double rel_discrepancy(double lhs, double rhs);

struct LemmaValue {
    int m = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double discrepancy = 0.0;
};

struct LemmaResult {
    std::vector<LemmaValue> per_m;
    double discrepancy = 0.0;  // max over m
};

/// Monge-Ampere, one good direction.
LemmaResult check_ma_lemma1(const JetSample& s);
LemmaResult check_ma_lemma2(const JetSample& s);

struct Lemma3Result {
    LemmaResult corrected;  // F^ab u_mga u_mgb = -(1/2)(u_gg + 1) Z
    LemmaResult literal;    // same with the factor 1 in place of 1/2
    std::vector<double> z;  // Z_m = F^{ab,cd} u_abm u_cdm per bad m
    std::vector<double> proxy;  // mu0 Z_m, the leading part of F^ab phi_ab
    bool sign_ok = true;        // every Z_m <= 1e-12
    bool proxy_ok = true;       // every mu0 Z_m <= 1e-12
    double discrepancy = 0.0;   // corrected.discrepancy
};

Lemma3Result check_ma_lemma3(const JetSample& s);

struct KEqualsNResult {
    double ftt = 0.0;
    double expansion = 0.0;
    double expansion_discrepancy = 0.0;
    std::vector<double> dm_ftt;  // d_m F^tt = F^{tt,cd} u_cdm per bad m
    double discrepancy = 0.0;    // max of the expansion discrepancy and |d_m F^tt|
};

/// Monge-Ampere, no good direction.
KEqualsNResult check_ma_K_equals_n(const JetSample& s);

/// Closed forms of Q for one bad index m (Donaldson, mu0 = 0).
struct QTerms {
    int m = 0;
    double q_a = 0.0;    // first formula
    double q_abc = 0.0;  // A + B + C with u_ttm substituted
    double q_c = 0.0;    // second formula
    double q_d = 0.0;    // completed square S1 + D + E
    double q_cd = 0.0;   // third formula S1 + D' + E
    double q_e = 0.0;    // fourth formula S1 + S2 + S3 (#G = 2 only, else NaN)

    double a = 0.0, b = 0.0, c = 0.0;
    double d = 0.0;           // D as a difference of a square term and C
    double d_expanded = 0.0;  // D after using the equation
    double e = 0.0;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
};

struct QFormsResult {
    std::vector<QTerms> per_m;
    double max_pairwise = 0.0;  // over Q_a, Q_abc, Q_cd and Q_e (when defined)
    double max_all = 0.0;       // also including the second formula and completed square
};

QFormsResult q_forms(const JetSample& s);

struct QNonnegResult {
    double q_min = 0.0;
    bool nonneg = true;
    bool groups_nonneg = true;  // S1, S2, S3 individually, #G = 2
};

/// #G <= 1 evaluates D after using the equation, #G = 2 the sum of squares.
QNonnegResult check_q_nonneg(const JetSample& s);

struct QStarResult {
    std::vector<double> values;
    double q_min = 0.0;
    bool nonneg = true;
};

QStarResult check_qstar_nonneg(const JetSample& s);

struct VReport {
    Mat v;                       // rows: bad indices in order, columns: alpha
    double sigma1_b = 0.0;
    std::vector<double> sigma1_b_m;
    std::vector<double> sigma2_b_m;
    std::vector<double> prefactor;  // sigma_#G(G) + (sigma1(B|m)^2 - sigma2(B|m)) / sigma1(B)^2
    double correction = 0.0;        // F^ab [sum_i V_ia V_ib / sigma1^3 + sum_{i!=j} u_ija u_jib / sigma1]
    bool correction_nonneg = true;
};

VReport eval_V(const JetSample& s, double floor = 1e-14);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace maxrank

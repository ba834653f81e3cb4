#pragma once

#include "maxrank/grid.hpp"
#include "maxrank/linalg.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace maxrank {

enum class OperatorKind { MongeAmpere, Donaldson };

std::string to_string(OperatorKind k);
OperatorKind operator_from_string(const std::string& s);

// Derivatives treat all d^2 entries of M as independent variables and are
// evaluated at symmetric M. Donaldson is taken in the determinant-compatible
// form F(M) = M_tt * sum_j M_jj - sum_j M_jt M_tj, which equals
// u_tt (n + Lap u) - sum_j u_jt^2 for M = D^2 u + I' and coincides with det M
// when n = 1.

/// M = hess + I', where I' has ones on the n space diagonal entries only.
Mat shifted_hessian(const Jet2& jet);

double f_matrix(OperatorKind kind, const Mat& m);
Mat grad_matrix(OperatorKind kind, const Mat& m);

/// Four-index tensor T(a,b,c,e) = d^2 F / dM_ab dM_ce.
class Tensor4 {
public:
    explicit Tensor4(int dim = 0) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}
    int dim() const { return dim_; }
    double& operator()(int a, int b, int c, int e) { return data_[offset(a, b, c, e)]; }
    double operator()(int a, int b, int c, int e) const { return data_[offset(a, b, c, e)]; }

    /// sum T(a,b,c,e) X_ab Y_ce
    double contract(const Mat& x, const Mat& y) const;

private:
    std::size_t offset(int a, int b, int c, int e) const
    {
        return static_cast<std::size_t>(((a * dim_ + b) * dim_ + c) * dim_ + e);
    }
    int dim_;
    std::vector<double> data_;
};

Tensor4 hess_matrix(OperatorKind kind, const Mat& m);

double f_value(OperatorKind kind, const Jet2& jet);
Mat grad_F(OperatorKind kind, const Jet2& jet);
Tensor4 hess_F(OperatorKind kind, const Jet2& jet);

struct ConeStatus {
    bool inside = false;
    double margin = 0.0;
};

/// Monge-Ampere: smallest eigenvalue of M. Donaldson: min(n + Lap u, F).
ConeStatus cone_check(OperatorKind kind, const Jet2& jet);

/// Dirichlet problem F(D^2 u + I') = eps with boundary slices u0 (t = 0) and
/// u1 (t = 1), each stored on the space lattice.
struct Problem {
    OperatorKind kind = OperatorKind::Donaldson;
    GridSpec spec;
    double eps = 1.0;
    std::vector<double> u0;
    std::vector<double> u1;
};

Problem make_problem(OperatorKind kind, const GridSpec& spec, double eps,
                     std::vector<double> u0, std::vector<double> u1);

/// Overwrites the two Dirichlet slices of a raw value vector.
void impose_boundary(const Problem& problem, std::vector<double>& values);

/// Interior f_value - eps; boundary slices 0.
ScalarField residual(const Problem& problem, const ScalarField& u);

/// F^{ab}(jet of u) (D^2_h w)_{ab} on interior slices.
ScalarField jacobian_apply(const Problem& problem, const ScalarField& u, const ScalarField& w);

/// Interior unknown numbering: space index * (nt - 1) + (k - 1).
std::size_t interior_unknowns(const GridSpec& spec);
std::size_t interior_index(const GridSpec& spec, const GridPoint& p);

/// Assembled Jacobian on interior unknowns; agrees with jacobian_apply.
Eigen::SparseMatrix<double> assemble_jacobian(const Problem& problem, std::span<const double> u);

} // namespace maxrank

#pragma once

#include "maxrank/linalg.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace maxrank {

/// Uniform lattice on X^n x [0,1]: periodic in the n space axes, Dirichlet
/// slices at k = 0 and k = nt. Axis index n (the last one) is time.
struct GridSpec {
    int n = 1;
    int nx = 8;
    int nt = 8;
    double hx = 1.0 / 8;
    double ht = 1.0 / 8;

    std::size_t space_points() const;
    std::size_t size() const { return space_points() * static_cast<std::size_t>(nt + 1); }
    double step(int axis) const { return axis == n ? ht : hx; }

    bool operator==(const GridSpec&) const = default;
};

GridSpec build_grid(int n, int nx, int nt);

/// Lattice point. Space indices beyond n are ignored; indices may lie outside
/// [0, nx) and are wrapped on access.
struct GridPoint {
    std::array<int, 3> i{};
    int k = 0;

    bool operator==(const GridPoint&) const = default;
};

std::size_t flat_index(const GridSpec& spec, const GridPoint& p);
GridPoint point_from_flat(const GridSpec& spec, std::size_t flat);
std::string describe(const GridSpec& spec, const GridPoint& p);

/// Coordinates (x_1..x_n, t) of a lattice point, without wrapping.
Vec coordinates(const GridSpec& spec, const GridPoint& p);

/// Calls fn for every lattice point with kmin <= k <= kmax, in flat order.
void for_each_point(const GridSpec& spec, int kmin, int kmax,
                    const std::function<void(const GridPoint&)>& fn);

class ScalarField {
public:
    ScalarField(GridSpec spec, std::vector<double> values);

    const GridSpec& spec() const { return spec_; }
    std::span<const double> values() const { return values_; }
    double at(const GridPoint& p) const { return values_[flat_index(spec_, p)]; }

private:
    GridSpec spec_;
    std::vector<double> values_;
};

using PointFunction = std::function<double(const Vec& x, double t)>;

ScalarField sample(const GridSpec& spec, const PointFunction& f);

/// Second-order jet: grad and hess are in (x_1..x_n, t) order.
struct Jet2 {
    double value = 0.0;
    Vec grad;
    Mat hess;

    int n() const { return static_cast<int>(grad.size()) - 1; }
};

/// Fully symmetric third-derivative tensor of size d^3, d = n + 1.
class Jet3 {
public:
    explicit Jet3(int dim = 0) : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim), 0.0) {}

    int dim() const { return dim_; }
    double operator()(int a, int b, int c) const { return data_[offset(a, b, c)]; }
    /// Writes all six index permutations.
    void set(int a, int b, int c, double v);

private:
    std::size_t offset(int a, int b, int c) const
    {
        return static_cast<std::size_t>((a * dim_ + b) * dim_ + c);
    }
    int dim_;
    std::vector<double> data_;
};

/// Centered-difference jet of a lattice function at an interior slice
/// (1 <= k <= nt-1). Works on raw values so the solver can reuse it.
Jet2 jet_at(const GridSpec& spec, std::span<const double> values, const GridPoint& p);
inline Jet2 jet_at(const ScalarField& f, const GridPoint& p) { return jet_at(f.spec(), f.values(), p); }

/// Second differences only (value and grad left empty); same stencils as jet_at.
Mat hessian_at(const GridSpec& spec, std::span<const double> values, const GridPoint& p);

/// n x n space block of the Hessian with periodic stencils; valid on every
/// slice, the Dirichlet ones included.
Mat space_hessian_at(const GridSpec& spec, std::span<const double> values, const GridPoint& p);

Jet3 third_jet_at(const ScalarField& f, const GridPoint& p);

/// values[p] = g(jet_at(field, p)) on interior slices; slice 0 copies slice 1
/// and slice nt copies slice nt-1.
ScalarField derived_field(const ScalarField& field, const std::function<double(const Jet2&)>& g);

/// Binary field dump: 16-byte header (n, nx, nt, reserved as u32 LE) then
/// little-endian doubles in flat order.
void write_field(const std::string& path, const ScalarField& field);
ScalarField read_field(const std::string& path);
std::vector<unsigned char> encode_field(const ScalarField& field);
ScalarField decode_field(std::span<const unsigned char> bytes);

} // namespace maxrank

#include "maxrank/grid.hpp"

#include "maxrank/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace maxrank {

namespace {

int wrap(int i, int nx)
{
    const int r = i % nx;
    return r < 0 ? r + nx : r;
}

GridPoint shifted(const GridPoint& p, int axis, int n, int delta)
{
    GridPoint q = p;
    if (axis == n)
        q.k += delta;
    else
        q.i[static_cast<std::size_t>(axis)] += delta;
    return q;
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(std::span<const unsigned char> in, std::size_t at)
{
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + static_cast<std::size_t>(b)]) << (8 * b);
    return v;
}

} // namespace

std::size_t GridSpec::space_points() const
{
    std::size_t s = 1;
    for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(nx);
    return s;
}

GridSpec build_grid(int n, int nx, int nt)
{
    if (n < 1 || n > 3) fail(ErrorCode::Config, "space dimension n must lie in [1,3], got " + std::to_string(n));
    if (nx < 8) fail(ErrorCode::Config, "Nx must be >= 8, got " + std::to_string(nx));
    if (nt < 8) fail(ErrorCode::Config, "Nt must be >= 8, got " + std::to_string(nt));
    return GridSpec{n, nx, nt, 1.0 / nx, 1.0 / nt};
}

std::size_t flat_index(const GridSpec& spec, const GridPoint& p)
{
    std::size_t s = 0;
    for (int a = 0; a < spec.n; ++a)
        s = s * static_cast<std::size_t>(spec.nx) + static_cast<std::size_t>(wrap(p.i[static_cast<std::size_t>(a)], spec.nx));
    return s * static_cast<std::size_t>(spec.nt + 1) + static_cast<std::size_t>(p.k);
}

GridPoint point_from_flat(const GridSpec& spec, std::size_t flat)
{
    GridPoint p;
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    p.k = static_cast<int>(flat % slices);
    std::size_t s = flat / slices;
    for (int a = spec.n - 1; a >= 0; --a) {
        p.i[static_cast<std::size_t>(a)] = static_cast<int>(s % static_cast<std::size_t>(spec.nx));
        s /= static_cast<std::size_t>(spec.nx);
    }
    return p;
}

std::string describe(const GridSpec& spec, const GridPoint& p)
{
    std::ostringstream os;
    os << "(i=";
    for (int a = 0; a < spec.n; ++a) os << (a ? "," : "") << p.i[static_cast<std::size_t>(a)];
    os << "; k=" << p.k << ")";
    return os.str();
}

Vec coordinates(const GridSpec& spec, const GridPoint& p)
{
    Vec c(spec.n + 1);
    for (int a = 0; a < spec.n; ++a) c(a) = p.i[static_cast<std::size_t>(a)] * spec.hx;
    c(spec.n) = p.k * spec.ht;
    return c;
}

void for_each_point(const GridSpec& spec, int kmin, int kmax,
                    const std::function<void(const GridPoint&)>& fn)
{
    const std::size_t sp = spec.space_points();
    const auto slices = static_cast<std::size_t>(spec.nt + 1);
    for (std::size_t s = 0; s < sp; ++s) {
        GridPoint p = point_from_flat(spec, s * slices);
        for (int k = kmin; k <= kmax; ++k) {
            p.k = k;
            fn(p);
        }
    }
}

ScalarField::ScalarField(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values))
{
    if (values_.size() != spec_.size())
        fail(ErrorCode::Contract, "field size " + std::to_string(values_.size()) + " does not match grid size " +
                                      std::to_string(spec_.size()));
    for (std::size_t f = 0; f < values_.size(); ++f)
        if (!std::isfinite(values_[f]))
            fail(ErrorCode::Sampling, "non-finite field value at " + describe(spec_, point_from_flat(spec_, f)));
}

ScalarField sample(const GridSpec& spec, const PointFunction& f)
{
    std::vector<double> v(spec.size());
    for_each_point(spec, 0, spec.nt, [&](const GridPoint& p) {
        const Vec c = coordinates(spec, p);
        const double val = f(c.head(spec.n), c(spec.n));
        if (!std::isfinite(val))
            fail(ErrorCode::Sampling, "sampled function is not finite at " + describe(spec, p));
        v[flat_index(spec, p)] = val;
    });
    return ScalarField(spec, std::move(v));
}

void Jet3::set(int a, int b, int c, double v)
{
    data_[offset(a, b, c)] = v;
    data_[offset(a, c, b)] = v;
    data_[offset(b, a, c)] = v;
    data_[offset(b, c, a)] = v;
    data_[offset(c, a, b)] = v;
    data_[offset(c, b, a)] = v;
}

Mat hessian_at(const GridSpec& spec, std::span<const double> u, const GridPoint& p)
{
    if (p.k < 1 || p.k > spec.nt - 1)
        fail(ErrorCode::Contract, "jet requested on a boundary time slice at " + describe(spec, p));
    const int d = spec.n + 1;
    Mat h(d, d);
    const double u0 = u[flat_index(spec, p)];
    for (int a = 0; a < d; ++a) {
        const double ha = spec.step(a);
        const double up = u[flat_index(spec, shifted(p, a, spec.n, +1))];
        const double um = u[flat_index(spec, shifted(p, a, spec.n, -1))];
        h(a, a) = (up - 2.0 * u0 + um) / (ha * ha);
        for (int b = a + 1; b < d; ++b) {
            const double hb = spec.step(b);
            const GridPoint pa = shifted(p, a, spec.n, +1);
            const GridPoint ma = shifted(p, a, spec.n, -1);
            const double upp = u[flat_index(spec, shifted(pa, b, spec.n, +1))];
            const double upm = u[flat_index(spec, shifted(pa, b, spec.n, -1))];
            const double ump = u[flat_index(spec, shifted(ma, b, spec.n, +1))];
            const double umm = u[flat_index(spec, shifted(ma, b, spec.n, -1))];
            h(a, b) = (upp - upm - ump + umm) / (4.0 * ha * hb);
            h(b, a) = h(a, b);
        }
    }
    return h;
}

Mat space_hessian_at(const GridSpec& spec, std::span<const double> u, const GridPoint& p)
{
    const int n = spec.n;
    const double h2 = spec.hx * spec.hx;
    Mat h(n, n);
    const double u0 = u[flat_index(spec, p)];
    for (int a = 0; a < n; ++a) {
        const double up = u[flat_index(spec, shifted(p, a, n, +1))];
        const double um = u[flat_index(spec, shifted(p, a, n, -1))];
        h(a, a) = (up - 2.0 * u0 + um) / h2;
        for (int b = a + 1; b < n; ++b) {
            const GridPoint pa = shifted(p, a, n, +1);
            const GridPoint ma = shifted(p, a, n, -1);
            h(a, b) = (u[flat_index(spec, shifted(pa, b, n, +1))] - u[flat_index(spec, shifted(pa, b, n, -1))] -
                       u[flat_index(spec, shifted(ma, b, n, +1))] + u[flat_index(spec, shifted(ma, b, n, -1))]) /
                      (4.0 * h2);
            h(b, a) = h(a, b);
        }
    }
    return h;
}

Jet2 jet_at(const GridSpec& spec, std::span<const double> u, const GridPoint& p)
{
    Jet2 j;
    j.hess = hessian_at(spec, u, p);
    const int d = spec.n + 1;
    j.value = u[flat_index(spec, p)];
    j.grad.resize(d);
    for (int a = 0; a < d; ++a) {
        const double up = u[flat_index(spec, shifted(p, a, spec.n, +1))];
        const double um = u[flat_index(spec, shifted(p, a, spec.n, -1))];
        j.grad(a) = (up - um) / (2.0 * spec.step(a));
    }
    return j;
}

Jet3 third_jet_at(const ScalarField& f, const GridPoint& p)
{
    const GridSpec& spec = f.spec();
    if (p.k < 2 || p.k > spec.nt - 2)
        fail(ErrorCode::Contract, "third jet needs time margin 2; requested at " + describe(spec, p));
    const int d = spec.n + 1;
    // raw(a,b,c) = d_c of hess_ab; symmetric in (a,b) already.
    std::vector<double> raw(static_cast<std::size_t>(d * d * d));
    for (int c = 0; c < d; ++c) {
        const Mat hp = hessian_at(spec, f.values(), shifted(p, c, spec.n, +1));
        const Mat hm = hessian_at(spec, f.values(), shifted(p, c, spec.n, -1));
        const double hc = spec.step(c);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                raw[static_cast<std::size_t>((a * d + b) * d + c)] = (hp(a, b) - hm(a, b)) / (2.0 * hc);
    }
    auto r = [&](int a, int b, int c) { return raw[static_cast<std::size_t>((a * d + b) * d + c)]; };
    Jet3 t(d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b)
            for (int c = b; c < d; ++c)
                t.set(a, b, c, (r(a, b, c) + r(a, c, b) + r(b, a, c) + r(b, c, a) + r(c, a, b) + r(c, b, a)) / 6.0);
    return t;
}

ScalarField derived_field(const ScalarField& field, const std::function<double(const Jet2&)>& g)
{
    const GridSpec& spec = field.spec();
    std::vector<double> v(spec.size());
    for_each_point(spec, 1, spec.nt - 1, [&](const GridPoint& p) {
        double val = 0.0;
        try {
            val = g(jet_at(field, p));
        } catch (const Error& e) {
            throw Error(e.code(), std::string(e.what()) + " at " + describe(spec, p));
        }
        v[flat_index(spec, p)] = val;
    });
    for_each_point(spec, 0, 0, [&](const GridPoint& p) {
        GridPoint q = p;
        q.k = 1;
        v[flat_index(spec, p)] = v[flat_index(spec, q)];
        q.k = spec.nt - 1;
        GridPoint top = p;
        top.k = spec.nt;
        v[flat_index(spec, top)] = v[flat_index(spec, q)];
    });
    return ScalarField(spec, std::move(v));
}

std::vector<unsigned char> encode_field(const ScalarField& field)
{
    const GridSpec& spec = field.spec();
    std::vector<unsigned char> out;
    out.reserve(16 + 8 * spec.size());
    put_u32(out, static_cast<std::uint32_t>(spec.n));
    put_u32(out, static_cast<std::uint32_t>(spec.nx));
    put_u32(out, static_cast<std::uint32_t>(spec.nt));
    put_u32(out, 0u);
    for (double x : field.values()) {
        const auto bits = std::bit_cast<std::uint64_t>(x);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffu));
    }
    return out;
}

ScalarField decode_field(std::span<const unsigned char> bytes)
{
    if (bytes.size() < 16) fail(ErrorCode::Io, "field dump shorter than its header");
    const GridSpec spec = build_grid(static_cast<int>(get_u32(bytes, 0)), static_cast<int>(get_u32(bytes, 4)),
                                     static_cast<int>(get_u32(bytes, 8)));
    if (bytes.size() != 16 + 8 * spec.size()) fail(ErrorCode::Io, "field dump size does not match its header");
    std::vector<double> v(spec.size());
    for (std::size_t f = 0; f < v.size(); ++f) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(bytes[16 + 8 * f + static_cast<std::size_t>(b)]) << (8 * b);
        v[f] = std::bit_cast<double>(bits);
    }
    return ScalarField(spec, std::move(v));
}

void write_field(const std::string& path, const ScalarField& field)
{
    const auto bytes = encode_field(field);
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::Io, "cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) fail(ErrorCode::Io, "write failed for " + path);
}

ScalarField read_field(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::Io, "cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_field(bytes);
}

} // namespace maxrank

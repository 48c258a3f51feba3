#pragma once

// Uniform rectangular lattices, domain masks, staggered fields and the
// discrete differential operators shared by every other module.
//
// Conventions used throughout the library:
//   * scalars live on nodes, vector components on edges (component j on
//     edges parallel to axis j, stored at the edge's lower node index);
//   * the flat node index runs x fastest: flat = (k*ny + j)*nx + i;
//   * Dirichlet data is imposed by freezing nodes outside the domain at 0
//     and keeping the boundary-crossing edges in the quadratic form.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace capbound {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
using Complex = std::complex<double>;

using Vec3 = std::array<double, 3>;
using Idx3 = std::array<int, 3>;
using NodeMask = std::vector<std::uint8_t>;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Uniform lattice with spacing h. Unused trailing axes have shape 1.
struct Lattice {
    int dim = 2;
    Idx3 shape{1, 1, 1};
    double h = 1.0;
    Vec3 origin{0.0, 0.0, 0.0};

    Lattice() = default;

    Lattice(int dim_, Idx3 shape_, double h_, Vec3 origin_ = {0.0, 0.0, 0.0})
        : dim(dim_), shape(shape_), h(h_), origin(origin_) {
        if (dim < 1 || dim > 3) throw Error("Lattice: dim must be 1, 2 or 3");
        if (!(h > 0.0)) throw Error("Lattice: spacing must be positive");
        for (int ax = 0; ax < dim; ++ax)
            if (shape[ax] < 2) throw Error("Lattice: need at least 2 nodes per axis");
        for (int ax = dim; ax < 3; ++ax) shape[ax] = 1;
    }

    std::int64_t node_count() const {
        return std::int64_t(shape[0]) * shape[1] * shape[2];
    }

    std::int64_t flat(const Idx3& n) const {
        return (std::int64_t(n[2]) * shape[1] + n[1]) * shape[0] + n[0];
    }

    Idx3 unflat(std::int64_t f) const {
        Idx3 n;
        n[0] = int(f % shape[0]);
        f /= shape[0];
        n[1] = int(f % shape[1]);
        n[2] = int(f / shape[1]);
        return n;
    }

    bool in_bounds(const Idx3& n) const {
        for (int ax = 0; ax < 3; ++ax)
            if (n[ax] < 0 || n[ax] >= shape[ax]) return false;
        return true;
    }

    Vec3 coord(const Idx3& n) const {
        return {origin[0] + n[0] * h, origin[1] + n[1] * h, origin[2] + n[2] * h};
    }

    Vec3 coord(std::int64_t f) const { return coord(unflat(f)); }

    /// Stride of a unit step along `ax` in flat indexing.
    std::int64_t stride(int ax) const {
        if (ax == 0) return 1;
        if (ax == 1) return shape[0];
        return std::int64_t(shape[0]) * shape[1];
    }

    bool same_geometry(const Lattice& o) const {
        return dim == o.dim && shape == o.shape && h == o.h && origin == o.origin;
    }
};

/// Inclusive node-index box.
struct IndexBox {
    Idx3 lo{0, 0, 0};
    Idx3 hi{0, 0, 0};

    bool contains(const Idx3& n) const {
        for (int ax = 0; ax < 3; ++ax)
            if (n[ax] < lo[ax] || n[ax] > hi[ax]) return false;
        return true;
    }

    Idx3 extent() const { return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}; }

    std::int64_t node_count() const {
        const Idx3 e = extent();
        return std::int64_t(e[0]) * e[1] * e[2];
    }
};

/// Boolean per node; true means the node belongs to Omega.
struct DomainMask {
    Lattice lattice;
    NodeMask inside;

    DomainMask() = default;

    explicit DomainMask(const Lattice& lat, bool fill = true)
        : lattice(lat), inside(lat.node_count(), fill ? 1 : 0) {}

    bool is_inside(std::int64_t f) const { return inside[std::size_t(f)] != 0; }

    std::int64_t count_inside() const {
        std::int64_t c = 0;
        for (auto v : inside) c += v;
        return c;
    }
};

struct ScalarField {
    Lattice lattice;
    std::vector<double> values;

    ScalarField() = default;

    explicit ScalarField(const Lattice& lat, double fill = 0.0)
        : lattice(lat), values(lat.node_count(), fill) {}

    double& operator[](std::int64_t f) { return values[std::size_t(f)]; }
    double operator[](std::int64_t f) const { return values[std::size_t(f)]; }
};

/// Edge-centered vector field. Component `ax` at node index n is the value on
/// the edge from n to n+e_ax; entries with n[ax] == shape[ax]-1 are unused.
struct VectorField {
    Lattice lattice;
    std::array<std::vector<double>, 3> comp;

    VectorField() = default;

    explicit VectorField(const Lattice& lat, double fill = 0.0) : lattice(lat) {
        for (int ax = 0; ax < lat.dim; ++ax)
            comp[ax].assign(lat.node_count(), fill);
    }

    double& at(int ax, std::int64_t f) { return comp[ax][std::size_t(f)]; }
    double at(int ax, std::int64_t f) const { return comp[ax][std::size_t(f)]; }
};

/// Axis-parallel closed cube Q_d embedded in a parent lattice.
struct CubeWindow {
    Vec3 center{0.0, 0.0, 0.0};
    double d = 0.0;
    IndexBox nodeRange;
};

namespace detail {

inline bool is_h_multiple(double x, double h) {
    const double q = x / h;
    return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, std::abs(q));
}

}  // namespace detail

/// Cube window whose lower corner sits at node `lo` with edge length d.
inline CubeWindow cube_at(const Lattice& lat, const Idx3& lo, double d) {
    if (!detail::is_h_multiple(d, lat.h))
        throw Error("cube_at: edge length must be an integer multiple of h");
    const int span = int(std::llround(d / lat.h));
    CubeWindow q;
    q.d = d;
    q.nodeRange.lo = lo;
    q.nodeRange.hi = lo;
    for (int ax = 0; ax < lat.dim; ++ax) q.nodeRange.hi[ax] = lo[ax] + span;
    if (!lat.in_bounds(q.nodeRange.lo) || !lat.in_bounds(q.nodeRange.hi))
        throw Error("cube_at: cube does not fit in the lattice");
    const Vec3 c0 = lat.coord(q.nodeRange.lo);
    for (int ax = 0; ax < 3; ++ax)
        q.center[ax] = c0[ax] + (ax < lat.dim ? 0.5 * d : 0.0);
    return q;
}

/// Lattice restricted to an index box (same spacing, shifted origin).
inline Lattice window_lattice(const Lattice& lat, const IndexBox& box) {
    const Idx3 e = box.extent();
    Idx3 shape = e;
    for (int ax = lat.dim; ax < 3; ++ax) shape[ax] = 1;
    return Lattice(lat.dim, shape, lat.h, lat.coord(box.lo));
}

template <typename Fn>
inline void for_each_node(const Lattice& lat, Fn&& fn) {
    Idx3 n;
    for (n[2] = 0; n[2] < lat.shape[2]; ++n[2])
        for (n[1] = 0; n[1] < lat.shape[1]; ++n[1])
            for (n[0] = 0; n[0] < lat.shape[0]; ++n[0]) fn(n, lat.flat(n));
}

template <typename Fn>
inline void for_each_node(const Lattice& lat, const IndexBox& box, Fn&& fn) {
    Idx3 n;
    for (n[2] = box.lo[2]; n[2] <= box.hi[2]; ++n[2])
        for (n[1] = box.lo[1]; n[1] <= box.hi[1]; ++n[1])
            for (n[0] = box.lo[0]; n[0] <= box.hi[0]; ++n[0]) fn(n, lat.flat(n));
}

/// Visit every lattice edge as (axis, lower-node flat index, upper-node flat index).
template <typename Fn>
inline void for_each_edge(const Lattice& lat, Fn&& fn) {
    for (int ax = 0; ax < lat.dim; ++ax) {
        const std::int64_t s = lat.stride(ax);
        Idx3 n;
        for (n[2] = 0; n[2] < lat.shape[2]; ++n[2])
            for (n[1] = 0; n[1] < lat.shape[1]; ++n[1])
                for (n[0] = 0; n[0] < lat.shape[0]; ++n[0]) {
                    if (n[ax] + 1 >= lat.shape[ax]) continue;
                    const std::int64_t f = lat.flat(n);
                    fn(ax, f, f + s);
                }
    }
}

inline ScalarField restrict_field(const ScalarField& f, const IndexBox& box) {
    ScalarField out(window_lattice(f.lattice, box));
    std::int64_t w = 0;
    for_each_node(f.lattice, box, [&](const Idx3&, std::int64_t g) { out.values[w++] = f.values[g]; });
    return out;
}

inline VectorField restrict_field(const VectorField& a, const IndexBox& box) {
    VectorField out(window_lattice(a.lattice, box));
    std::int64_t w = 0;
    for_each_node(a.lattice, box, [&](const Idx3&, std::int64_t g) {
        for (int ax = 0; ax < a.lattice.dim; ++ax) out.comp[ax][w] = a.comp[ax][g];
        ++w;
    });
    return out;
}

inline NodeMask restrict_mask(const NodeMask& m, const Lattice& lat, const IndexBox& box) {
    NodeMask out;
    out.reserve(box.node_count());
    for_each_node(lat, box, [&](const Idx3&, std::int64_t g) { out.push_back(m[std::size_t(g)]); });
    return out;
}

/// Forward-difference gradient: component ax on the edge (n, n+e_ax).
/// An infinite sentinel at either stencil node flags the edge as infinite.
inline VectorField gradient(const ScalarField& f) {
    const Lattice& lat = f.lattice;
    VectorField g(lat);
    for_each_edge(lat, [&](int ax, std::int64_t lo, std::int64_t hi) {
        const double a = f.values[std::size_t(lo)];
        const double b = f.values[std::size_t(hi)];
        g.comp[ax][std::size_t(lo)] =
            (std::isinf(a) || std::isinf(b)) ? kInf : (b - a) / lat.h;
    });
    return g;
}

/// h^n * sum over interior edges of squared forward differences / h^2.
/// Edges leaving `region` are excluded; an empty region gives 0.
inline double dirichlet_energy(const ScalarField& f, const NodeMask& region) {
    const Lattice& lat = f.lattice;
    if (std::int64_t(region.size()) != lat.node_count())
        throw Error("dirichlet_energy: region mask size mismatch");
    const double w = std::pow(lat.h, lat.dim - 2);
    double acc = 0.0;
    for_each_edge(lat, [&](int, std::int64_t lo, std::int64_t hi) {
        if (!region[std::size_t(lo)] || !region[std::size_t(hi)]) return;
        const double df = f.values[std::size_t(hi)] - f.values[std::size_t(lo)];
        acc += df * df;
    });
    return w * acc;
}

inline double dirichlet_energy(const ScalarField& f) {
    return dirichlet_energy(f, NodeMask(f.lattice.node_count(), 1));
}

/// Node quadrature h^n * sum of f over the masked nodes.
inline double integrate(const ScalarField& f, const NodeMask& region) {
    const Lattice& lat = f.lattice;
    double acc = 0.0;
    const std::int64_t n = lat.node_count();
    for (std::int64_t i = 0; i < n; ++i)
        if (region[std::size_t(i)]) acc += f.values[std::size_t(i)];
    return acc * std::pow(lat.h, lat.dim);
}

}  // namespace capbound

#pragma once

// Discrete scalar/vector fields on uniform grids with 4th-order calculus
// (gradient, divergence, curl, Laplacian) and cubic interpolation.
//
// Fields are immutable value types in spirit: every operation returns a new
// field.  Differentiation near the ends of non-periodic axes uses one-sided
// 4th-order stencils; strip geometry must go through the symmetric extension
// before differentiation (see extension.hpp).

#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "grid.hpp"
#include "util.hpp"

namespace mhdlab {

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.node_count(), fill) {}
    ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        require(values.size() == g.node_count(), "scalar field: value count != node count");
    }

    template <class Fn>
    static ScalarField sample(const Grid& g, Fn&& fn) {
        ScalarField f(g);
        std::size_t nc = g.node_count();
        parallel_for(nc, [&](std::size_t i) {
            double X[3];
            g.coords(i, X);
            f.values[i] = fn(X);
        });
        return f;
    }

    double max_abs() const {
        double m = 0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    bool all_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
    ScalarField& operator+=(const ScalarField& o) {
        require(grid == o.grid, "field +=: grid mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require(grid == o.grid, "field -=: grid mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (auto& v : values) v *= s;
        return *this;
    }
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
};

inline ScalarField pointwise_mul(const ScalarField& a, const ScalarField& b) {
    require(a.grid == b.grid, "pointwise_mul: grid mismatch");
    ScalarField r = a;
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] *= b.values[i];
    return r;
}

struct VectorField {
    Grid grid;
    std::vector<ScalarField> comp;  // d components

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g), comp(std::size_t(g.d), ScalarField(g)) {}

    template <class Fn>
    static VectorField sample(const Grid& g, Fn&& fn) {  // fn(X, out[d])
        VectorField f(g);
        std::size_t nc = g.node_count();
        std::vector<double*> ptr(std::size_t(g.d));
        for (int c = 0; c < g.d; ++c) ptr[std::size_t(c)] = f.comp[std::size_t(c)].values.data();
        parallel_for(nc, [&](std::size_t i) {
            double X[3], out[3] = {0, 0, 0};
            g.coords(i, X);
            fn(X, out);
            for (int c = 0; c < g.d; ++c) ptr[std::size_t(c)][i] = out[c];
        });
        return f;
    }

    double max_abs() const {
        double m = 0;
        std::size_t nc = grid.node_count();
        for (std::size_t i = 0; i < nc; ++i) {
            double s = 0;
            for (int c = 0; c < grid.d; ++c) s += comp[std::size_t(c)].values[i] * comp[std::size_t(c)].values[i];
            m = std::max(m, s);
        }
        return std::sqrt(m);
    }
    VectorField& operator+=(const VectorField& o) {
        for (int c = 0; c < grid.d; ++c) comp[std::size_t(c)] += o.comp[std::size_t(c)];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        for (int c = 0; c < grid.d; ++c) comp[std::size_t(c)] -= o.comp[std::size_t(c)];
        return *this;
    }
    VectorField& operator*=(double s) {
        for (int c = 0; c < grid.d; ++c) comp[std::size_t(c)] *= s;
        return *this;
    }
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(double s, VectorField a) { return a *= s; }
};

// Independent antisymmetric components of nabla wedge z.  Stored entries are
// c_{jk} = d_k z^j - d_j z^k for j < k, ordered (0,1), (0,2), (1,2).
struct CurlField {
    Grid grid;
    std::vector<ScalarField> entry;  // 1 for d=2, 3 for d=3

    CurlField() = default;
    explicit CurlField(const Grid& g) : grid(g), entry(g.d == 2 ? 1 : 3, ScalarField(g)) {}

    static int entry_count(int d) { return d == 2 ? 1 : 3; }
    // (j,k) with j<k for entry index e
    static std::pair<int, int> entry_axes(int e) {
        static const int table[3][2] = {{0, 1}, {0, 2}, {1, 2}};
        return {table[e][0], table[e][1]};
    }
    CurlField& operator+=(const CurlField& o) {
        for (std::size_t e = 0; e < entry.size(); ++e) entry[e] += o.entry[e];
        return *this;
    }
    CurlField& operator-=(const CurlField& o) {
        for (std::size_t e = 0; e < entry.size(); ++e) entry[e] -= o.entry[e];
        return *this;
    }
    CurlField& operator*=(double s) {
        for (auto& f : entry) f *= s;
        return *this;
    }
    double max_abs() const {
        double m = 0;
        for (const auto& f : entry) m = std::max(m, f.max_abs());
        return m;
    }
};

// ---------------------------------------------------------------------------
// Differentiation.  4th-order centered stencils; one-sided 4th order at the
// two layers adjacent to a non-periodic end.

namespace detail {

inline void check_differentiable(const Grid& g, const char* op) {
    require(g.geom != Geometry::Strip,
            std::string(op) + ": differentiate strip fields via their symmetric extension");
    require(g.n >= 8, std::string(op) + ": N >= 8 required");
}

// First derivative along `axis`, writes into out (same grid).
inline void diff_axis(const ScalarField& u, int axis, ScalarField& out) {
    const Grid& g = u.grid;
    const Grid::Axis& ax = g.axes[std::size_t(axis)];
    const double inv12h = 1.0 / (12.0 * g.dx);
    const std::size_t st = g.stride(axis);
    const int cnt = ax.count;
    const std::size_t nc = g.node_count();
    const double* v = u.values.data();
    double* o = out.values.data();

    parallel_for(nc, [&](std::size_t i) {
        int iv[3];
        g.unindex(i, iv);
        int p = iv[axis];
        auto at = [&](int q) { return v[i + (std::size_t(q) - std::size_t(p)) * st]; };
        double r;
        if (ax.periodic) {
            auto wrap = [&](int q) {
                int w = (q % cnt + cnt) % cnt;
                return v[i + (std::size_t(w) - std::size_t(p)) * st];
            };
            r = (-wrap(p + 2) + 8 * wrap(p + 1) - 8 * wrap(p - 1) + wrap(p - 2)) * inv12h;
        } else if (p >= 2 && p <= cnt - 3) {
            r = (-at(p + 2) + 8 * at(p + 1) - 8 * at(p - 1) + at(p - 2)) * inv12h;
        } else if (p == 0) {
            r = (-25 * at(0) + 48 * at(1) - 36 * at(2) + 16 * at(3) - 3 * at(4)) * inv12h;
        } else if (p == 1) {
            r = (-3 * at(0) - 10 * at(1) + 18 * at(2) - 6 * at(3) + at(4)) * inv12h;
        } else if (p == cnt - 2) {
            r = (3 * at(cnt - 1) + 10 * at(cnt - 2) - 18 * at(cnt - 3) + 6 * at(cnt - 4) - at(cnt - 5)) * inv12h;
        } else {  // p == cnt-1
            r = (25 * at(cnt - 1) - 48 * at(cnt - 2) + 36 * at(cnt - 3) - 16 * at(cnt - 4) + 3 * at(cnt - 5)) *
                inv12h;
        }
        o[i] = r;
    }, 4096);
}

// Second derivative along `axis` (4th order).
inline void diff2_axis(const ScalarField& u, int axis, ScalarField& out) {
    const Grid& g = u.grid;
    const Grid::Axis& ax = g.axes[std::size_t(axis)];
    const double inv12h2 = 1.0 / (12.0 * g.dx * g.dx);
    const std::size_t st = g.stride(axis);
    const int cnt = ax.count;
    const std::size_t nc = g.node_count();
    const double* v = u.values.data();
    double* o = out.values.data();

    parallel_for(nc, [&](std::size_t i) {
        int iv[3];
        g.unindex(i, iv);
        int p = iv[axis];
        auto at = [&](int q) { return v[i + (std::size_t(q) - std::size_t(p)) * st]; };
        double r;
        if (ax.periodic) {
            auto wrap = [&](int q) {
                int w = (q % cnt + cnt) % cnt;
                return v[i + (std::size_t(w) - std::size_t(p)) * st];
            };
            r = (-wrap(p + 2) + 16 * wrap(p + 1) - 30 * wrap(p) + 16 * wrap(p - 1) - wrap(p - 2)) * inv12h2;
        } else if (p >= 2 && p <= cnt - 3) {
            r = (-at(p + 2) + 16 * at(p + 1) - 30 * at(p) + 16 * at(p - 1) - at(p - 2)) * inv12h2;
        } else if (p == 0) {
            r = (45 * at(0) - 154 * at(1) + 214 * at(2) - 156 * at(3) + 61 * at(4) - 10 * at(5)) * inv12h2;
        } else if (p == 1) {
            r = (10 * at(0) - 15 * at(1) - 4 * at(2) + 14 * at(3) - 6 * at(4) + at(5)) * inv12h2;
        } else if (p == cnt - 2) {
            r = (10 * at(cnt - 1) - 15 * at(cnt - 2) - 4 * at(cnt - 3) + 14 * at(cnt - 4) - 6 * at(cnt - 5) +
                 at(cnt - 6)) *
                inv12h2;
        } else {
            r = (45 * at(cnt - 1) - 154 * at(cnt - 2) + 214 * at(cnt - 3) - 156 * at(cnt - 4) + 61 * at(cnt - 5) -
                 10 * at(cnt - 6)) *
                inv12h2;
        }
        o[i] = r;
    }, 4096);
}

}  // namespace detail

inline ScalarField derivative(const ScalarField& u, int axis) {
    detail::check_differentiable(u.grid, "derivative");
    require(u.all_finite(), "derivative: non-finite values in input");
    ScalarField out(u.grid);
    detail::diff_axis(u, axis, out);
    return out;
}

inline VectorField gradient(const ScalarField& u) {
    detail::check_differentiable(u.grid, "gradient");
    require(u.all_finite(), "gradient: non-finite values in input");
    VectorField out(u.grid);
    for (int a = 0; a < u.grid.d; ++a) detail::diff_axis(u, a, out.comp[std::size_t(a)]);
    return out;
}

inline ScalarField divergence(const VectorField& z) {
    detail::check_differentiable(z.grid, "divergence");
    ScalarField out(z.grid);
    ScalarField tmp(z.grid);
    for (int a = 0; a < z.grid.d; ++a) {
        require(z.comp[std::size_t(a)].all_finite(), "divergence: non-finite values in input");
        detail::diff_axis(z.comp[std::size_t(a)], a, tmp);
        out += tmp;
    }
    return out;
}

inline CurlField curl(const VectorField& z) {
    detail::check_differentiable(z.grid, "curl");
    CurlField out(z.grid);
    ScalarField tmp(z.grid);
    for (int e = 0; e < CurlField::entry_count(z.grid.d); ++e) {
        auto [j, k] = CurlField::entry_axes(e);
        // d_k z^j - d_j z^k
        detail::diff_axis(z.comp[std::size_t(j)], k, out.entry[std::size_t(e)]);
        detail::diff_axis(z.comp[std::size_t(k)], j, tmp);
        out.entry[std::size_t(e)] -= tmp;
    }
    return out;
}

inline ScalarField laplacian(const ScalarField& u) {
    detail::check_differentiable(u.grid, "laplacian");
    ScalarField out(u.grid), tmp(u.grid);
    for (int a = 0; a < u.grid.d; ++a) {
        detail::diff2_axis(u, a, tmp);
        out += tmp;
    }
    return out;
}

// Row-wise divergence of an antisymmetric matrix field psi (stored as
// CurlField): z^j = sum_k d_k psi^{jk}, with psi^{jk} = -psi^{kj}.
inline VectorField divergence_rows(const CurlField& psi) {
    detail::check_differentiable(psi.grid, "divergence_rows");
    const Grid& g = psi.grid;
    VectorField out(g);
    ScalarField tmp(g);
    for (int e = 0; e < CurlField::entry_count(g.d); ++e) {
        auto [j, k] = CurlField::entry_axes(e);
        // psi^{jk} = entry e, psi^{kj} = -entry e
        detail::diff_axis(psi.entry[std::size_t(e)], k, tmp);
        out.comp[std::size_t(j)] += tmp;
        detail::diff_axis(psi.entry[std::size_t(e)], j, tmp);
        out.comp[std::size_t(k)] -= tmp;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cubic interpolation (4-point Lagrange per axis; exact on per-axis cubics
// and at grid nodes).  Off-box queries in free directions are clamped and
// counted; strip geometry reflects the last axis through rho (even rule).

struct InterpStats {
    long clamped = 0;
};

namespace detail {

inline void lagrange_weights(double t, double w[4]) {
    // nodes at -1, 0, 1, 2; t in [0,1)
    double t1 = t - 1.0, t2 = t - 2.0, tp = t + 1.0;
    w[0] = -t * t1 * t2 / 6.0;
    w[1] = tp * t1 * t2 / 2.0;
    w[2] = -tp * t * t2 / 2.0;
    w[3] = tp * t * t1 / 6.0;
}

}  // namespace detail

inline double reflect_unit(double y) {  // rho_0(y) = inf_n |y - 2n|
    double m = y - 2.0 * std::floor(y / 2.0);  // in [0,2)
    return m <= 1.0 ? m : 2.0 - m;
}

inline double interp_at(const ScalarField& u, const double* Xq, InterpStats* stats = nullptr) {
    const Grid& g = u.grid;
    const double* v = u.values.data();
    int base[3];
    double w[3][4];
    int counts[3];
    bool wrap[3];

    for (int a = 0; a < g.d; ++a) {
        const Grid::Axis& ax = g.axes[std::size_t(a)];
        counts[a] = ax.count;
        wrap[a] = ax.periodic;
        double x = Xq[a];
        if (g.geom == Geometry::Strip && a == g.d - 1) x = reflect_unit(x);
        double s = (x - ax.origin) / g.dx;
        double sr = std::round(s);
        if (std::abs(s - sr) < 1e-12 * std::max(1.0, std::abs(s))) s = sr;  // node queries hit stored values
        if (ax.periodic) {
            double c = double(ax.count);
            s -= c * std::floor(s / c);
            int i0 = int(std::floor(s));
            if (i0 >= ax.count) i0 = ax.count - 1;
            detail::lagrange_weights(s - i0, w[a]);
            base[a] = i0 - 1;
        } else {
            double smax = double(ax.count - 1);
            if (s < 0.0 || s > smax) {
                if (stats) ++stats->clamped;
                s = std::min(std::max(s, 0.0), smax);
            }
            int i0 = int(std::floor(s));
            if (i0 > ax.count - 2) i0 = ax.count - 2;
            double t = s - i0;
            // shift the 4-point window to stay inside the axis
            int b = i0 - 1;
            if (b < 0) b = 0;
            if (b > ax.count - 4) b = ax.count - 4;
            double tt = t + (i0 - 1 - b);  // position relative to window node 1
            // Lagrange on nodes {b, b+1, b+2, b+3} at local coordinate tt in node-1 frame
            detail::lagrange_weights(tt, w[a]);
            base[a] = b;
        }
    }

    auto node = [&](int a, int k) {
        int q = base[a] + k;
        if (wrap[a]) q = (q % counts[a] + counts[a]) % counts[a];
        return q;
    };

    if (g.d == 2) {
        const std::size_t s1 = g.stride(1);
        double acc = 0;
        for (int k1 = 0; k1 < 4; ++k1) {
            std::size_t off1 = std::size_t(node(1, k1)) * s1;
            double row = 0;
            for (int k0 = 0; k0 < 4; ++k0) row += w[0][k0] * v[off1 + std::size_t(node(0, k0))];
            acc += w[1][k1] * row;
        }
        return acc;
    }
    const std::size_t s1 = g.stride(1), s2 = g.stride(2);
    double acc = 0;
    for (int k2 = 0; k2 < 4; ++k2) {
        std::size_t off2 = std::size_t(node(2, k2)) * s2;
        double p2 = 0;
        for (int k1 = 0; k1 < 4; ++k1) {
            std::size_t off1 = off2 + std::size_t(node(1, k1)) * s1;
            double row = 0;
            for (int k0 = 0; k0 < 4; ++k0) row += w[0][k0] * v[off1 + std::size_t(node(0, k0))];
            p2 += w[1][k1] * row;
        }
        acc += w[2][k2] * p2;
    }
    return acc;
}

struct InterpResult {
    std::vector<double> values;
    long clamped = 0;
};

inline InterpResult interpolate(const ScalarField& u, std::span<const double> points) {
    const int d = u.grid.d;
    require(points.size() % std::size_t(d) == 0, "interpolate: point list length not a multiple of d");
    std::size_t np = points.size() / std::size_t(d);
    InterpResult r;
    r.values.resize(np);
    std::vector<long> clamp_per(np, 0);
    parallel_for(np, [&](std::size_t i) {
        InterpStats st;
        r.values[i] = interp_at(u, points.data() + i * std::size_t(d), &st);
        clamp_per[i] = st.clamped;
    });
    for (long c : clamp_per) r.clamped += c;
    return r;
}

}  // namespace mhdlab

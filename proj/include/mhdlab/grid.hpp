#pragma once

// Uniform grids over truncated R^d, the torus, the strip R^{d-1} x [0,1],
// and the strip's symmetric extension R^{d-1} x [0,2)-periodic.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "util.hpp"

namespace mhdlab {

enum class Geometry : int { FreeBox = 0, Torus = 1, Strip = 2, ExtendedStrip = 3 };

inline const char* geometry_name(Geometry g) {
    switch (g) {
        case Geometry::FreeBox: return "free-box";
        case Geometry::Torus: return "torus";
        case Geometry::Strip: return "strip";
        case Geometry::ExtendedStrip: return "extended-strip";
    }
    return "?";
}

struct Grid {
    struct Axis {
        int count = 0;        // nodes on this axis
        double origin = 0.0;  // coordinate of node 0
        bool periodic = false;
        double period = 0.0;  // identification length when periodic
    };

    int d = 2;
    int n = 0;       // resolution parameter: spacing = 2L/n
    double L = 0.0;  // box half-width in the free directions
    Geometry geom = Geometry::FreeBox;
    double dx = 0.0;
    std::array<Axis, 3> axes{};

    static Grid free_box(int d, double L, int n) { return make(d, L, n, Geometry::FreeBox); }
    static Grid torus(int d, double L, int n) { return make(d, L, n, Geometry::Torus); }
    static Grid strip(int d, double L, int n) { return make(d, L, n, Geometry::Strip); }
    static Grid extended_strip(int d, double L, int n) { return make(d, L, n, Geometry::ExtendedStrip); }

    static Grid make(int d, double L, int n, Geometry geom) {
        require(d == 2 || d == 3, "grid: d must be 2 or 3");
        require(n >= 8, "grid: N >= 8 required");
        require(L > 0, "grid: L > 0 required");
        Grid g;
        g.d = d;
        g.n = n;
        g.L = L;
        g.geom = geom;
        g.dx = 2.0 * L / n;
        for (int a = 0; a < d; ++a) {
            Axis& ax = g.axes[std::size_t(a)];
            bool last = (a == d - 1);
            switch (geom) {
                case Geometry::FreeBox:
                    ax = {n + 1, -L, false, 0.0};
                    break;
                case Geometry::Torus:
                    ax = {n, -L, true, 2.0 * L};
                    break;
                case Geometry::Strip:
                    if (last) {
                        double md = 1.0 / g.dx;
                        int m = int(std::lround(md));
                        require(std::abs(md - m) < 1e-9 && m >= 2,
                                "strip grid: 1/spacing must be an integer >= 2 (choose L, N accordingly)");
                        ax = {m + 1, 0.0, false, 0.0};
                    } else {
                        ax = {n + 1, -L, false, 0.0};
                    }
                    break;
                case Geometry::ExtendedStrip:
                    if (last) {
                        double md = 1.0 / g.dx;
                        int m = int(std::lround(md));
                        require(std::abs(md - m) < 1e-9 && m >= 2,
                                "extended strip grid: 1/spacing must be an integer >= 2");
                        ax = {2 * m, 0.0, true, 2.0};
                    } else {
                        ax = {n + 1, -L, false, 0.0};
                    }
                    break;
            }
        }
        return g;
    }

    bool operator==(const Grid& o) const {
        return d == o.d && n == o.n && L == o.L && geom == o.geom;
    }

    std::size_t node_count() const {
        std::size_t c = 1;
        for (int a = 0; a < d; ++a) c *= std::size_t(axes[std::size_t(a)].count);
        return c;
    }

    std::size_t stride(int axis) const {
        std::size_t s = 1;
        for (int a = 0; a < axis; ++a) s *= std::size_t(axes[std::size_t(a)].count);
        return s;
    }

    std::size_t index(const int* iv) const {
        std::size_t idx = 0, s = 1;
        for (int a = 0; a < d; ++a) {
            idx += std::size_t(iv[a]) * s;
            s *= std::size_t(axes[std::size_t(a)].count);
        }
        return idx;
    }

    void unindex(std::size_t idx, int* iv) const {
        for (int a = 0; a < d; ++a) {
            int c = axes[std::size_t(a)].count;
            iv[a] = int(idx % std::size_t(c));
            idx /= std::size_t(c);
        }
    }

    void coords(std::size_t idx, double* X) const {
        int iv[3];
        unindex(idx, iv);
        for (int a = 0; a < d; ++a) X[a] = axes[std::size_t(a)].origin + iv[a] * dx;
    }

    // Squared distance with minimal-image reduction on periodic axes.
    double dist2(const double* X, const double* Y) const {
        double s = 0;
        for (int a = 0; a < d; ++a) {
            double t = X[a] - Y[a];
            const Axis& ax = axes[std::size_t(a)];
            if (ax.periodic) {
                t = std::remainder(t, ax.period);
            }
            s += t * t;
        }
        return s;
    }
    double dist(const double* X, const double* Y) const { return std::sqrt(dist2(X, Y)); }

    bool is_boundary_node_last_axis(std::size_t idx) const {
        const Axis& ax = axes[std::size_t(d - 1)];
        if (ax.periodic) return false;
        int iv[3];
        unindex(idx, iv);
        return iv[d - 1] == 0 || iv[d - 1] == ax.count - 1;
    }

    std::string describe() const {
        return std::string(geometry_name(geom)) + " d=" + std::to_string(d) + " N=" + std::to_string(n) +
               " L=" + format_double(L, "%.6g") + " dx=" + format_double(dx, "%.6g");
    }
};

}  // namespace mhdlab

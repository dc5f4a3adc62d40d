#pragma once

// Symmetric extensions T_e / T_o from the strip R^{d-1} x [0,1] to the
// 2-periodic extended strip, the reflection map rho, and the vector
// extension T = (T_e, ..., T_e, T_o) used for nonpenetrating fields.

#include <cmath>
#include <string>

#include "field.hpp"

namespace mhdlab {

enum class StripParity { Even, OddAdmissible };

struct StripField {
    ScalarField field;
    StripParity parity = StripParity::Even;

    StripField(ScalarField f, StripParity p) : field(std::move(f)), parity(p) {
        require(field.grid.geom == Geometry::Strip, "strip field: strip geometry required");
        if (parity == StripParity::OddAdmissible) {
            double tol = 1e-12 * std::max(1.0, field.max_abs());
            require(boundary_trace(field) <= tol,
                    "strip field: odd-admissible requires zero boundary trace (measured " +
                        format_double(boundary_trace(field)) + ")");
        }
    }

    static double boundary_trace(const ScalarField& f) {
        const Grid& g = f.grid;
        double m = 0;
        std::size_t nc = g.node_count();
        for (std::size_t i = 0; i < nc; ++i)
            if (g.is_boundary_node_last_axis(i)) m = std::max(m, std::abs(f.values[i]));
        return m;
    }
};

// rho(X) = (x, rho_0(y)), rho_0(y) = inf_n |y - 2n|; 1-Lipschitz in y.
inline void reflect_point(const Grid& strip, const double* X, double* out) {
    for (int a = 0; a < strip.d - 1; ++a) out[a] = X[a];
    out[strip.d - 1] = reflect_unit(X[strip.d - 1]);
}

namespace ext_detail {

inline Grid extended_grid_of(const Grid& strip) {
    require(strip.geom == Geometry::Strip, "extension: strip geometry required");
    return Grid::extended_strip(strip.d, strip.L, strip.n);
}

template <class Mirror>
ScalarField extend_last_axis(const ScalarField& f, Mirror&& mirror) {
    const Grid& gs = f.grid;
    Grid ge = extended_grid_of(gs);
    const int d = gs.d;
    const int m = gs.axes[std::size_t(d - 1)].count - 1;  // nodes 0..m cover [0,1]
    ScalarField out(ge);
    std::size_t nc = ge.node_count();
    parallel_for(nc, [&](std::size_t i) {
        int iv[3];
        ge.unindex(i, iv);
        int j = iv[d - 1];  // 0 .. 2m-1 on [0,2)
        bool mirrored = j > m;
        int js = mirrored ? 2 * m - j : j;
        iv[d - 1] = js;
        double v = f.values[gs.index(iv)];
        out.values[i] = mirrored ? mirror(v) : v;
    }, 4096);
    return out;
}

}  // namespace ext_detail

inline ScalarField even_extend(const StripField& f) {
    require(f.parity == StripParity::Even, "even_extend: even parity tag required");
    return ext_detail::extend_last_axis(f.field, [](double v) { return v; });
}

inline ScalarField odd_extend(const StripField& f) {
    require(f.parity == StripParity::OddAdmissible, "odd_extend: odd-admissible tag required");
    return ext_detail::extend_last_axis(f.field, [](double v) { return -v; });
}

// Odd extension with automatic boundary-trace subtraction: removes the
// linear-in-y part interpolating the measured traces and reports its size.
struct OddExtendCorrected {
    ScalarField extended;
    double correction_magnitude = 0.0;
};

inline OddExtendCorrected odd_extend_corrected(const ScalarField& f) {
    require(f.grid.geom == Geometry::Strip, "odd_extend_corrected: strip geometry required");
    const Grid& gs = f.grid;
    const int d = gs.d;
    const int m = gs.axes[std::size_t(d - 1)].count - 1;
    ScalarField corrected = f;
    double corr = 0;
    std::size_t nc = gs.node_count();
    // subtract f(x,0)(1-y) + f(x,1)y column by column
    for (std::size_t i = 0; i < nc; ++i) {
        int iv[3];
        gs.unindex(i, iv);
        int j = iv[d - 1];
        int jv0[3] = {iv[0], iv[1], iv[2]}, jv1[3] = {iv[0], iv[1], iv[2]};
        jv0[d - 1] = 0;
        jv1[d - 1] = m;
        double y = double(j) / m;
        double lin = f.values[gs.index(jv0)] * (1.0 - y) + f.values[gs.index(jv1)] * y;
        corrected.values[i] -= lin;
        corr = std::max(corr, std::abs(lin));
    }
    OddExtendCorrected out;
    out.extended = ext_detail::extend_last_axis(corrected, [](double v) { return -v; });
    out.correction_magnitude = corr;
    return out;
}

// T z = (T_e z^1, ..., T_e z^{d-1}, T_o z^d); requires z^d = 0 on the boundary.
inline VectorField extend_vector(const VectorField& z) {
    require(z.grid.geom == Geometry::Strip, "extend_vector: strip geometry required");
    Grid ge = ext_detail::extended_grid_of(z.grid);
    VectorField out(ge);
    for (int c = 0; c < z.grid.d - 1; ++c)
        out.comp[std::size_t(c)] = even_extend(StripField(z.comp[std::size_t(c)], StripParity::Even));
    out.comp[std::size_t(z.grid.d - 1)] =
        odd_extend(StripField(z.comp[std::size_t(z.grid.d - 1)], StripParity::OddAdmissible));
    return out;
}

// Restriction back to the strip: inverse of the extensions on their images.
inline ScalarField restrict_to_strip(const ScalarField& f) {
    require(f.grid.geom == Geometry::ExtendedStrip, "restrict_to_strip: extended-strip geometry required");
    const Grid& ge = f.grid;
    Grid gs = Grid::strip(ge.d, ge.L, ge.n);
    ScalarField out(gs);
    std::size_t nc = gs.node_count();
    for (std::size_t i = 0; i < nc; ++i) {
        int iv[3];
        gs.unindex(i, iv);
        out.values[i] = f.values[ge.index(iv)];
    }
    return out;
}

inline VectorField restrict_to_strip(const VectorField& f) {
    VectorField out(Grid::strip(f.grid.d, f.grid.L, f.grid.n));
    for (int c = 0; c < f.grid.d; ++c) out.comp[std::size_t(c)] = restrict_to_strip(f.comp[std::size_t(c)]);
    return out;
}

}  // namespace mhdlab

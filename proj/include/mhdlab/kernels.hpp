#pragma once

// Kernel machinery for the singular integral operators: the C^2 cutoff
// profile, Newton-potential kernels, dyadic ring kernels, and cached
// offset tables (cell-averaged quadrature, image sums on periodic axes).
//
// Sign conventions, pinned by the divergence identity for the pressure and
// by the Fourier symbols of the Riesz transforms:
//   grad N(X)  = X / (2 pi |X|^2)  [d=2],  X / (4 pi |X|^3)  [d=3]
//     (the convention that makes div I(u,w) = d_i u^j d_j w^i - div u div w
//      and matches the d=2 value (1/(2 pi), 0) at X = e_1),
//   Riesz ring kernels psi_ij = dd N with the opposite-sign potential, so
//   that sum_n psi_n - delta_ij/d has symbol -xi_i xi_j / |xi|^2.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "grid.hpp"
#include "util.hpp"

namespace mhdlab {

// ---------------------------------------------------------------------------
// Cutoff profile: theta = 1 on [0,1], quintic smoothstep down to 0 at 2.

inline double cutoff_theta(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    double x = r - 1.0;
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}
inline double cutoff_theta_d1(double r) {
    if (r <= 1.0 || r >= 2.0) return 0.0;
    double x = r - 1.0;
    return -30.0 * x * x * (1.0 + x * (-2.0 + x));
}
inline double cutoff_theta_d2(double r) {
    if (r <= 1.0 || r >= 2.0) return 0.0;
    double x = r - 1.0;
    return -60.0 * x * (1.0 + x * (-3.0 + 2.0 * x));
}

inline double newton_c(int d) { return d == 2 ? 6.283185307179586476925287 : 12.56637061435917295385057; }

// radial derivative of the Newton potential: N'(r) = 1/(c_d r^{d-1})
inline double newton_radial_d1(double r, int d) {
    return 1.0 / (newton_c(d) * (d == 2 ? r : r * r));
}

inline void newton_grad(const double* X, int d, double* out) {
    double r2 = 0;
    for (int a = 0; a < d; ++a) r2 += X[a] * X[a];
    require(r2 > 0, "newton_grad: X must be nonzero");
    double f = d == 2 ? 1.0 / (newton_c(2) / 2.0 * 2.0 * r2)          // 1/(2 pi r^2)
                      : 1.0 / (newton_c(3) * r2 * std::sqrt(r2));     // 1/(4 pi r^3)
    for (int a = 0; a < d; ++a) out[a] = X[a] * f;
}

// ---------------------------------------------------------------------------
// Pointwise kernel families.  Each functor fills ncomp values at offset D.

// T1 near-field, telescoped over the resolvable rings:
//   grad N(X) (theta(|X|/R) - theta(|X| 2^{kcut}/R)), comps = d.
struct KernelT1 {
    int d;
    double R;
    double fine_factor;  // 2^{k_max+1}
    int ncomp() const { return d; }
    double support() const { return 2.0 * R; }
    void eval(const double* D, double* out) const {
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += D[a] * D[a];
        double r = std::sqrt(r2);
        if (r <= 0.0 || r >= 2.0 * R) {
            for (int a = 0; a < d; ++a) out[a] = 0;
            return;
        }
        double win = cutoff_theta(r / R) - cutoff_theta(r * fine_factor / R);
        // grad N = X/(2 pi r^2) [d=2], X/(4 pi r^3) [d=3]
        double g = d == 2 ? win / (6.283185307179586 * r2) : win / (12.566370614359172 * r2 * r);
        for (int a = 0; a < d; ++a) out[a] = D[a] * g;
    }
};

// Far-field kernel of the pressure: comps (m,i,j) = d*d*d values of
// d_i d_j [ (grad N)_m (1 - theta(|X|/R)) ].
struct KernelTFar {
    int d;
    double R;
    int ncomp() const { return d * d * d; }
    double support() const { return -1.0; }  // unbounded; capped by the table reach
    void eval(const double* D, double* out) const {
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += D[a] * D[a];
        double r = std::sqrt(r2);
        int nc = ncomp();
        if (r <= R) {  // 1 - theta = 0 inside |X| <= R
            for (int c = 0; c < nc; ++c) out[c] = 0;
            return;
        }
        double cd = newton_c(d);
        double q = 1.0 - cutoff_theta(r / R);
        double q1 = -cutoff_theta_d1(r / R) / R;
        double q2 = -cutoff_theta_d2(r / R) / (R * R);
        double rd = std::pow(r, double(d));
        double g = q / (cd * rd);
        double g1 = q1 / (cd * rd) - d * q / (cd * rd * r);
        double g2 = q2 / (cd * rd) - 2.0 * d * q1 / (cd * rd * r) + d * (d + 1) * q / (cd * rd * r2);
        double A = g1 / r;
        double B = (g2 - g1 / r) / r2;
        for (int m = 0; m < d; ++m)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    double v = B * D[i] * D[j] * D[m];
                    if (j == m) v += A * D[i];
                    if (i == m) v += A * D[j];
                    if (i == j) v += A * D[m];
                    out[(m * d + i) * d + j] = v;
                }
        (void)g;
    }
};

// Riesz ring ladder, telescoped: psi_ij(X) ring-windowed, and optionally the
// analytic derivative d_k psi_ij.  Window: theta(r/s_coarse) - theta(r/s_fine).
struct KernelRiesz {
    int d;
    int i, j;
    int k = -1;          // -1: plain kernel; else d_k of it
    double s_coarse;     // coarsest ring scale (2^{-n_min})
    double s_fine;       // finest ring scale (2^{-n_max}); window vanishes below s_fine/2
    int ncomp() const { return 1; }
    double support() const { return 2.0 * s_coarse; }

    void eval(const double* D, double* out) const {
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += D[a] * D[a];
        double r = std::sqrt(r2);
        if (r <= 0.25 * s_fine || r >= 2.0 * s_coarse) {
            out[0] = 0;
            return;
        }
        double cd = newton_c(d);
        // P_ij = dd N (with -Delta N = delta): (d X_i X_j / r^2 - delta_ij) / (c_d r^d)
        double rd = std::pow(r, double(d));
        double P = (d * D[i] * D[j] / r2 - (i == j ? 1.0 : 0.0)) / (cd * rd);
        // telescoped window over rings n_min..n_max: theta(r/s_coarse) - theta(2r/s_fine)
        double win = cutoff_theta(r / s_coarse) - cutoff_theta(2.0 * r / s_fine);
        if (k < 0) {
            out[0] = P * win;
            return;
        }
        // d_k [P * win] = (d_k P) win + P win' X_k / r, with
        // d_k P = [d (dki Xj + dkj Xi)/r^2 - 2d Xi Xj Xk/r^4]/(c_d r^d) - d Xk/r^2 P
        double dP = (d * ((k == i ? D[j] : 0.0) + (k == j ? D[i] : 0.0)) / r2 -
                     d * 2.0 * D[i] * D[j] * D[k] / (r2 * r2)) /
                    (cd * rd);
        dP -= double(d) * D[k] / r2 * P;
        double dwin =
            cutoff_theta_d1(r / s_coarse) / s_coarse - 2.0 * cutoff_theta_d1(2.0 * r / s_fine) / s_fine;
        out[0] = dP * win + P * dwin * D[k] / r;
    }
};

// Gaussian heat kernel at evolution time a.
struct KernelHeat {
    int d;
    double a;
    int ncomp() const { return 1; }
    double support() const { return 9.0 * std::sqrt(a); }
    void eval(const double* D, double* out) const {
        double r2 = 0;
        for (int q = 0; q < d; ++q) r2 += D[q] * D[q];
        out[0] = std::pow(12.566370614359172 * a, -0.5 * d) * std::exp(-r2 / (4.0 * a));
    }
};

// Single dyadic ring of the grad-N family (tests: Lemma 5.1/5.2 diagnostics).
struct KernelGradNRing {
    int d;
    double scale;  // ring at |X| ~ scale = 2^{-k}
    int comp_axis;
    int ncomp() const { return 1; }
    double support() const { return 2.0 * scale; }
    void eval(const double* D, double* out) const {
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += D[a] * D[a];
        double r = std::sqrt(r2);
        if (r <= 0.25 * scale || r >= 2.0 * scale) {
            out[0] = 0;
            return;
        }
        double win = cutoff_theta(r / scale) - cutoff_theta(2.0 * r / scale);
        double g = d == 2 ? 1.0 / (6.283185307179586 * r2) : 1.0 / (12.566370614359172 * r2 * r);
        out[0] = D[comp_axis] * g * win;
    }
};

// Positive mollifier ring phi*_k(X) = -grad N . grad theta(|X|/s); unit mass.
struct KernelDivWitness {
    int d;
    double scale;
    int ncomp() const { return 1; }
    double support() const { return 2.0 * scale; }
    void eval(const double* D, double* out) const {
        double r2 = 0;
        for (int a = 0; a < d; ++a) r2 += D[a] * D[a];
        double r = std::sqrt(r2);
        if (r <= 0.0 || r >= 2.0 * scale) {
            out[0] = 0;
            return;
        }
        out[0] = -newton_radial_d1(r, d) * cutoff_theta_d1(r / scale) / scale;
    }
};

// ---------------------------------------------------------------------------
// Offset tables.  Entry (comp, D) holds the kernel integrated over the dx-cell
// centered at offset D (4x4 Gauss-Legendre per cell in 2-D, 2x2x2 in 3-D),
// summed over periodic images within the reach.

struct OffsetTable {
    int d = 2;
    std::array<int, 3> dim{};     // table extent per axis
    std::array<int, 3> center{};  // index of offset zero (free axes)
    std::array<bool, 3> wrap{};
    std::array<int, 3> reach_cells{};  // max |offset| in cells per axis (free axes)
    int ncomp = 1;
    std::vector<double> data;  // [comp][idx]

    std::size_t entries() const {
        std::size_t e = 1;
        for (int a = 0; a < d; ++a) e *= std::size_t(dim[std::size_t(a)]);
        return e;
    }
    const double* comp(int c) const { return data.data() + std::size_t(c) * entries(); }
    double* comp_mut(int c) { return data.data() + std::size_t(c) * entries(); }

    double comp_sum(int c) const {
        double s = 0;
        const double* p = comp(c);
        for (std::size_t i = 0; i < entries(); ++i) s += p[i];
        return s;
    }
    double comp_l1(int c) const {
        double s = 0;
        const double* p = comp(c);
        for (std::size_t i = 0; i < entries(); ++i) s += std::abs(p[i]);
        return s;
    }
};

// Builds the table for kernel K on grid g.  reach: cap on |D| (defaults to the
// kernel's own support; unbounded kernels use the grid's geometric reach).
template <class K>
OffsetTable build_offset_table(const Grid& g, const K& kern, double reach_override = -1.0) {
    OffsetTable t;
    t.d = g.d;
    t.ncomp = kern.ncomp();

    double reach = kern.support();
    if (reach < 0) {
        reach = 0;
        for (int a = 0; a < g.d; ++a) {
            const Grid::Axis& ax = g.axes[std::size_t(a)];
            double ext = ax.periodic ? ax.period : (ax.count - 1) * g.dx;
            reach += ext * ext;
        }
        reach = std::sqrt(reach);  // box diagonal
    }
    if (reach_override > 0) reach = reach_override;

    for (int a = 0; a < g.d; ++a) {
        const Grid::Axis& ax = g.axes[std::size_t(a)];
        int rc = int(std::ceil(reach / g.dx)) + 1;
        if (ax.periodic) {
            t.wrap[std::size_t(a)] = true;
            t.dim[std::size_t(a)] = ax.count;
            t.center[std::size_t(a)] = 0;
            t.reach_cells[std::size_t(a)] = ax.count;  // full wrap
        } else {
            rc = std::min(rc, ax.count - 1);
            t.wrap[std::size_t(a)] = false;
            t.dim[std::size_t(a)] = 2 * rc + 1;
            t.center[std::size_t(a)] = rc;
            t.reach_cells[std::size_t(a)] = rc;
        }
    }
    t.data.assign(std::size_t(t.ncomp) * t.entries(), 0.0);

    const double dx = g.dx;
    const double cell = std::pow(dx, double(g.d));

    // iterate unwrapped offsets within reach, including periodic images
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < g.d; ++a) {
        const Grid::Axis& ax = g.axes[std::size_t(a)];
        if (ax.periodic) {
            int per_cells = int(std::lround(ax.period / dx));
            int span = std::max(per_cells, int(std::ceil(reach / dx)) + 1);
            lo[std::size_t(a)] = -span;
            hi[std::size_t(a)] = span;
        } else {
            lo[std::size_t(a)] = -t.reach_cells[std::size_t(a)];
            hi[std::size_t(a)] = t.reach_cells[std::size_t(a)];
        }
    }

    std::size_t n0 = std::size_t(hi[0] - lo[0] + 1);
    std::size_t n1 = std::size_t(g.d >= 2 ? hi[1] - lo[1] + 1 : 1);
    std::size_t n2 = std::size_t(g.d >= 3 ? hi[2] - lo[2] + 1 : 1);
    std::size_t total = n0 * n1 * n2;

    std::mutex scatter_mtx;
    int nthreads = thread_count();
    std::size_t rows_per = (n1 * n2 + std::size_t(nthreads) - 1) / std::size_t(nthreads);

    parallel_for(std::size_t(nthreads), [&](std::size_t tid) {
        std::vector<double> local(t.data.size(), 0.0);
        double out[27];
        double Dp[3] = {0, 0, 0};
        std::size_t row_lo = tid * rows_per, row_hi = std::min(n1 * n2, row_lo + rows_per);
        for (std::size_t row = row_lo; row < row_hi; ++row) {
            int i1 = int(row % n1) + lo[1];
            int i2 = g.d >= 3 ? int(row / n1) + lo[2] : 0;
            for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
                int iv[3] = {i0, i1, i2};
                double r2max = 0;
                for (int a = 0; a < g.d; ++a) {
                    double c = std::abs(iv[a]) > 0 ? (std::abs(iv[a]) - 0.5) * dx : 0.0;
                    r2max += c * c;
                }
                if (r2max > reach * reach) continue;

                // wrapped table index
                std::size_t idx = 0, stride = 1;
                bool inside = true;
                for (int a = 0; a < g.d; ++a) {
                    int q;
                    if (t.wrap[std::size_t(a)]) {
                        int cnt = t.dim[std::size_t(a)];
                        q = ((iv[a] % cnt) + cnt) % cnt;
                    } else {
                        q = iv[a] + t.center[std::size_t(a)];
                        if (q < 0 || q >= t.dim[std::size_t(a)]) {
                            inside = false;
                            break;
                        }
                    }
                    idx += std::size_t(q) * stride;
                    stride *= std::size_t(t.dim[std::size_t(a)]);
                }
                if (!inside) continue;

                // nodal (midpoint) sampling: spectrally clean for smooth
                // kernels; ring roughness sits near the grid Nyquist where the
                // windows are already tapered
                for (int a = 0; a < g.d; ++a) Dp[a] = iv[a] * dx;
                kern.eval(Dp, out);
                for (int c = 0; c < t.ncomp; ++c) local[std::size_t(c) * t.entries() + idx] += out[c] * cell;
            }
        }
        std::lock_guard<std::mutex> lock(scatter_mtx);
        for (std::size_t i = 0; i < local.size(); ++i) t.data[i] += local[i];
    }, 1);
    (void)total;
    return t;
}

// ---------------------------------------------------------------------------
// Table cache.

namespace kernel_detail {

struct TableCache {
    std::mutex mtx;
    std::map<std::string, std::shared_ptr<const OffsetTable>> map;
    static TableCache& instance() {
        static TableCache c;
        return c;
    }
};

}  // namespace kernel_detail

template <class Builder>
std::shared_ptr<const OffsetTable> cached_table(const std::string& key, Builder&& b) {
    auto& c = kernel_detail::TableCache::instance();
    {
        std::lock_guard<std::mutex> lock(c.mtx);
        auto it = c.map.find(key);
        if (it != c.map.end()) return it->second;
    }
    static std::mutex build_mtx;  // serialize builds; lookups stay cheap
    std::lock_guard<std::mutex> build_lock(build_mtx);
    {
        std::lock_guard<std::mutex> lock(c.mtx);
        auto it = c.map.find(key);
        if (it != c.map.end()) return it->second;
    }
    auto t = std::make_shared<OffsetTable>(b());
    std::lock_guard<std::mutex> lock(c.mtx);
    c.map[key] = t;
    return t;
}

}  // namespace mhdlab

#pragma once

// Estimators for the weighted Hölder norms
//   |u|_{0;h} = sup |u|/h,
//   [u]_{a;h} = sup |u(X)-u(Y)| / ((h(X)+h(Y)) |X-Y|^a),
// their gradient versions, and the scaled combinations with parameter R.
//
// The supremum over pairs is estimated from a deterministic schedule:
// exhaustive pairs within each node's 5x5(x5) index neighborhood (the
// |X-Y| -> 0 regime that dominates alpha-seminorms) plus 64 quasi-random far
// partners per node, split per node so parallel and serial runs agree
// bit-for-bit.  Grids with at most 1024 nodes are evaluated exhaustively.

#include <cstdint>
#include <span>
#include <vector>

#include "field.hpp"
#include "grid.hpp"
#include "util.hpp"

namespace mhdlab {

struct HolderReport {
    double sup_weighted = 0;   // |u|_{0;h}
    double semi_alpha = 0;     // [u]_{alpha;h}
    double grad_sup = 0;       // |grad u|_{0;h}
    double grad_semi_alpha = 0;  // [grad u]_{alpha;h}
    double lip_semi = 0;       // [u]_{1;h}
    double alpha = 0.5;
    double R = 0;
    std::size_t pairs_used = 0;

    // |u|_{0,alpha;h} (unscaled) and the scaled variants
    double c0alpha() const { return sup_weighted + semi_alpha; }
    double c0alpha_scaled() const { return sup_weighted + std::pow(R, alpha) * semi_alpha; }
    double grad_c0alpha_scaled() const { return grad_sup + std::pow(R, alpha) * grad_semi_alpha; }
    double c1alpha_scaled() const {
        if (R == 0.0) return sup_weighted + grad_sup + grad_semi_alpha;  // unscaled |u|_{1,alpha;h}
        return c0alpha() + std::max(R, std::pow(R, 1.0 - alpha)) * grad_c0alpha_scaled();
    }
    std::string csv_row() const {
        return format_double(sup_weighted, "%.10e") + "," + format_double(semi_alpha, "%.10e") + "," +
               format_double(grad_sup, "%.10e") + "," + format_double(grad_semi_alpha, "%.10e") + "," +
               format_double(lip_semi, "%.10e") + "," + format_double(alpha, "%.6g") + "," +
               format_double(R, "%.6g") + "," + std::to_string(pairs_used);
    }
    static const char* csv_header() { return "sup,semi,grad_sup,grad_semi,lip,alpha,R,pairs"; }
};

// View over one or more co-located component arrays.  Euclid treats the
// components as a vector; Op as the matrix (i,j) = comps[i*d+j] measured in
// the operator norm (the paper's matrix-norm convention for gradients).
struct MultiView {
    const Grid* grid = nullptr;
    std::vector<const double*> comps;
    enum class Norm { Euclid, Op } mode = Norm::Euclid;
    int mat_d = 0;

    static MultiView of(const ScalarField& f) {
        MultiView v;
        v.grid = &f.grid;
        v.comps = {f.values.data()};
        return v;
    }
    static MultiView of(const VectorField& f) {
        MultiView v;
        v.grid = &f.grid;
        for (auto& c : f.comp) v.comps.push_back(c.values.data());
        return v;
    }
    static MultiView of(const CurlField& f) {
        MultiView v;
        v.grid = &f.grid;
        for (auto& c : f.entry) v.comps.push_back(c.values.data());
        return v;
    }
    static MultiView matrix(const Grid& g, std::vector<const double*> entries, int d) {
        MultiView v;
        v.grid = &g;
        v.comps = std::move(entries);
        v.mode = Norm::Op;
        v.mat_d = d;
        return v;
    }

    double node_norm(std::size_t i) const {
        if (mode == Norm::Euclid) {
            double s = 0;
            for (const double* c : comps) s += c[i] * c[i];
            return std::sqrt(s);
        }
        MatD m;
        m.d = mat_d;
        for (int k = 0; k < mat_d * mat_d; ++k) m.a[std::size_t(k)] = comps[std::size_t(k)][i];
        return op_norm(m);
    }
    double diff_norm(std::size_t i, std::size_t j) const {
        if (mode == Norm::Euclid) {
            double s = 0;
            for (const double* c : comps) {
                double t = c[i] - c[j];
                s += t * t;
            }
            return std::sqrt(s);
        }
        MatD m;
        m.d = mat_d;
        for (int k = 0; k < mat_d * mat_d; ++k)
            m.a[std::size_t(k)] = comps[std::size_t(k)][i] - comps[std::size_t(k)][j];
        return op_norm(m);
    }
};

namespace holder_detail {

constexpr std::size_t kExhaustiveMaxNodes = 1024;
constexpr int kFarPartners = 64;
constexpr std::uint64_t kDefaultSeed = 0x9e1ece5700c0ffeeULL;

inline double pow_alpha_half(double d2, double alpha) {
    // |X-Y|^alpha from squared distance
    if (alpha == 1.0) return std::sqrt(d2);
    if (alpha == 0.5) return std::sqrt(std::sqrt(d2));
    return std::pow(d2, 0.5 * alpha);
}

// kth far partner of node i: quasi-random (R2 sequence) lattice point,
// phase-shifted per node by a hash so the schedule is node-decomposable.
inline std::size_t far_partner(const Grid& g, std::size_t i, int k, std::uint64_t seed) {
    static const double g1[3] = {0.7548776662466927, 0.5698402909980532, 0.6823278038280193};
    std::uint64_t h = hash_mix(seed, i);
    int iv[3];
    std::size_t idx = 0, stride = 1;
    for (int a = 0; a < g.d; ++a) {
        int cnt = g.axes[std::size_t(a)].count;
        double phase = double((h = splitmix64(h)) >> 11) * 0x1.0p-53;
        double u = phase + (k + 1) * g1[a];
        u -= std::floor(u);
        iv[a] = int(u * cnt);
        if (iv[a] >= cnt) iv[a] = cnt - 1;
        idx += std::size_t(iv[a]) * stride;
        stride *= std::size_t(cnt);
    }
    return idx;
}

}  // namespace holder_detail

inline double sup_weighted(const MultiView& u, std::span<const double> h) {
    const std::size_t nc = u.grid->node_count();
    require(h.size() == nc, "sup_weighted: weight array size mismatch");
    std::size_t nt = std::size_t(thread_count());
    std::vector<double> partial(nt, 0.0);
    std::size_t per = (nc + nt - 1) / nt;
    parallel_for(nt, [&](std::size_t c) {
        double m = 0;
        for (std::size_t i = c * per; i < std::min(nc, (c + 1) * per); ++i) {
            require(h[i] > 1e-300, "sup_weighted: weight underflow");
            m = std::max(m, u.node_norm(i) / h[i]);
        }
        partial[c] = m;
    }, 1);
    double m = 0;
    for (double v : partial) m = std::max(m, v);
    return m;
}

// [u]_{alpha;h} estimate; alpha in (0,1].  pairs_out counts evaluated pairs.
inline double seminorm_alpha(const MultiView& u, std::span<const double> h, double alpha,
                             std::uint64_t seed = holder_detail::kDefaultSeed,
                             std::size_t* pairs_out = nullptr) {
    require(alpha > 0.0 && alpha <= 1.0, "seminorm_alpha: alpha in (0,1] required");
    const Grid& g = *u.grid;
    const std::size_t nc = g.node_count();
    require(h.size() == nc, "seminorm_alpha: weight array size mismatch");

    std::size_t nt = std::size_t(thread_count());
    std::vector<double> partial(nt, 0.0);
    std::vector<std::size_t> pcount(nt, 0);
    std::size_t per = (nc + nt - 1) / nt;

    auto eval_pair = [&](std::size_t i, std::size_t j, double& best) {
        double Xi[3], Xj[3];
        g.coords(i, Xi);
        g.coords(j, Xj);
        double d2 = g.dist2(Xi, Xj);
        if (d2 <= 0.0) return false;
        double num = u.diff_norm(i, j);
        double den = (h[i] + h[j]) * holder_detail::pow_alpha_half(d2, alpha);
        double r = num / den;
        if (r > best) best = r;
        return true;
    };

    if (nc <= holder_detail::kExhaustiveMaxNodes) {
        parallel_for(nt, [&](std::size_t c) {
            double best = 0;
            std::size_t cnt = 0;
            for (std::size_t i = c * per; i < std::min(nc, (c + 1) * per); ++i)
                for (std::size_t j = i + 1; j < nc; ++j)
                    if (eval_pair(i, j, best)) ++cnt;
            partial[c] = best;
            pcount[c] = cnt;
        }, 1);
    } else {
        // near window: lexicographically positive offsets within [-2,2]^d
        std::vector<std::array<int, 3>> offsets;
        int lim = 2;
        int zmax = g.d == 3 ? lim : 0;
        for (int dz = -zmax; dz <= zmax; ++dz)
            for (int dy = -lim; dy <= lim; ++dy)
                for (int dx = -lim; dx <= lim; ++dx) {
                    bool positive = dz > 0 || (dz == 0 && (dy > 0 || (dy == 0 && dx > 0)));
                    if (positive) offsets.push_back({dx, dy, dz});
                }
        parallel_for(nt, [&](std::size_t c) {
            double best = 0;
            std::size_t cnt = 0;
            int iv[3], jv[3];
            for (std::size_t i = c * per; i < std::min(nc, (c + 1) * per); ++i) {
                g.unindex(i, iv);
                for (const auto& off : offsets) {
                    bool ok = true;
                    for (int a = 0; a < g.d; ++a) {
                        const Grid::Axis& ax = g.axes[std::size_t(a)];
                        int q = iv[a] + off[std::size_t(a)];
                        if (ax.periodic)
                            q = (q % ax.count + ax.count) % ax.count;
                        else if (q < 0 || q >= ax.count) {
                            ok = false;
                            break;
                        }
                        jv[a] = q;
                    }
                    if (!ok) continue;
                    if (eval_pair(i, g.index(jv), best)) ++cnt;
                }
                for (int k = 0; k < holder_detail::kFarPartners; ++k) {
                    std::size_t j = holder_detail::far_partner(g, i, k, seed);
                    if (j == i) continue;
                    if (eval_pair(i, j, best)) ++cnt;
                }
            }
            partial[c] = best;
            pcount[c] = cnt;
        }, 1);
    }
    double m = 0;
    std::size_t cnt = 0;
    for (std::size_t c = 0; c < nt; ++c) {
        m = std::max(m, partial[c]);
        cnt += pcount[c];
    }
    if (pairs_out) *pairs_out = cnt;
    return m;
}

// Full report for a field whose gradient view is supplied by the caller
// (strip fields differentiate through their extension).
inline HolderReport norm_report_with_grad(const MultiView& u, const MultiView& grad,
                                          std::span<const double> h, double alpha, double R,
                                          std::uint64_t seed = holder_detail::kDefaultSeed) {
    HolderReport r;
    r.alpha = alpha;
    r.R = R;
    std::size_t p1 = 0, p2 = 0, p3 = 0;
    r.sup_weighted = sup_weighted(u, h);
    r.semi_alpha = seminorm_alpha(u, h, alpha, seed, &p1);
    r.lip_semi = seminorm_alpha(u, h, 1.0, seed, &p2);
    r.grad_sup = sup_weighted(grad, h);
    r.grad_semi_alpha = seminorm_alpha(grad, h, alpha, seed, &p3);
    r.pairs_used = p1 + p2 + p3;
    return r;
}

inline HolderReport norm_c1alpha(const ScalarField& u, std::span<const double> h, double alpha, double R,
                                 std::uint64_t seed = holder_detail::kDefaultSeed) {
    VectorField g = gradient(u);
    return norm_report_with_grad(MultiView::of(u), MultiView::of(g), h, alpha, R, seed);
}

inline HolderReport norm_c1alpha(const VectorField& u, std::span<const double> h, double alpha, double R,
                                 std::uint64_t seed = holder_detail::kDefaultSeed) {
    std::vector<ScalarField> parts;  // (i,j) = d_i u^j
    parts.reserve(std::size_t(u.grid.d * u.grid.d));
    for (int i = 0; i < u.grid.d; ++i)
        for (int j = 0; j < u.grid.d; ++j) parts.push_back(derivative(u.comp[std::size_t(j)], i));
    std::vector<const double*> ptrs;
    for (auto& p : parts) ptrs.push_back(p.values.data());
    MultiView gv = MultiView::matrix(u.grid, std::move(ptrs), u.grid.d);
    return norm_report_with_grad(MultiView::of(u), gv, h, alpha, R, seed);
}

// C^{0,alpha} report only (no derivatives); used for strip fields and for
// quantities whose gradient is not needed.
inline HolderReport norm_c0alpha(const MultiView& u, std::span<const double> h, double alpha,
                                 std::uint64_t seed = holder_detail::kDefaultSeed) {
    HolderReport r;
    r.alpha = alpha;
    std::size_t p1 = 0, p2 = 0;
    r.sup_weighted = sup_weighted(u, h);
    r.semi_alpha = seminorm_alpha(u, h, alpha, seed, &p1);
    r.lip_semi = seminorm_alpha(u, h, 1.0, seed, &p2);
    r.pairs_used = p1 + p2;
    return r;
}

}  // namespace mhdlab

#pragma once

// Weight-function families and their structural checks.
//
// The closed enumeration covers: the unit weight, the one-directional
// power-law family f0(x1) = (C0+x1^2)^{-(1+delta)/2}, the two-directional
// singular weights phi1 = (x1^2+x2^2)^{-(1+delta)/2} and phi0 = |x2|^{-delta}
// (epsilon-regularized), heat-evolved weights H(1+2*mu1*t)phi, the
// B0-translates f_pm(t,X) = f(t, X +- B0 t), and the convolution weight
//   g(t,X) = int f_+(t,Y) f_-(t,Y) / (1 + |X-Y|^{d+1}) dY.
// B0 is fixed to (1,0,...,0).

#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "field.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "util.hpp"

namespace mhdlab {

enum class WeightKind { Unit, PowerF0, Phi1, Phi0, HeatEvolved, Shifted, ConvG };

struct WeightSpec {
    WeightKind kind = WeightKind::Unit;
    double c0 = 2.0;     // PowerF0
    double delta = 0.25; // PowerF0 / Phi1 / Phi0
    double eps = 0.0;    // Phi1 / Phi0 regularization
    double mu1 = 0.0;    // HeatEvolved
    int sign = +1;       // Shifted
    std::shared_ptr<const WeightSpec> base;  // HeatEvolved / Shifted / ConvG

    static WeightSpec unit() { return WeightSpec{}; }
    static WeightSpec power_f0(double c0 = 2.0, double delta = 0.25) {
        require(c0 > 1.0 && delta > 0.0 && delta < 1.0, "power_f0: need C0 > 1, delta in (0,1)");
        WeightSpec w;
        w.kind = WeightKind::PowerF0;
        w.c0 = c0;
        w.delta = delta;
        return w;
    }
    static WeightSpec phi1(double delta = 0.25, double eps = 0.0) {
        require(delta > 0.0 && delta < 0.5, "phi1: delta in (0,1/2)");
        WeightSpec w;
        w.kind = WeightKind::Phi1;
        w.delta = delta;
        w.eps = eps;
        return w;
    }
    static WeightSpec phi0(double delta = 0.25, double eps = 0.0) {
        require(delta > 0.0 && delta < 0.5, "phi0: delta in (0,1/2)");
        WeightSpec w;
        w.kind = WeightKind::Phi0;
        w.delta = delta;
        w.eps = eps;
        return w;
    }
    static WeightSpec heat_evolved(WeightSpec b, double mu1) {
        require(mu1 >= 0.0, "heat_evolved: mu1 >= 0");
        WeightSpec w;
        w.kind = WeightKind::HeatEvolved;
        w.mu1 = mu1;
        w.base = std::make_shared<WeightSpec>(std::move(b));
        return w;
    }
    static WeightSpec shifted(WeightSpec b, int sign) {
        require(sign == +1 || sign == -1, "shifted: sign must be +-1");
        WeightSpec w;
        w.kind = WeightKind::Shifted;
        w.sign = sign;
        w.base = std::make_shared<WeightSpec>(std::move(b));
        return w;
    }
    static WeightSpec conv_g(WeightSpec f) {
        WeightSpec w;
        w.kind = WeightKind::ConvG;
        w.base = std::make_shared<WeightSpec>(std::move(f));
        return w;
    }

    bool depends_on_time() const {
        switch (kind) {
            case WeightKind::Unit:
            case WeightKind::PowerF0:
            case WeightKind::Phi1:
            case WeightKind::Phi0: return false;
            case WeightKind::HeatEvolved: return mu1 > 0.0 || base->depends_on_time();
            case WeightKind::Shifted:
            case WeightKind::ConvG: return true;
        }
        return true;
    }

    // x-only weights are the ones admissible in extension-norm checks (Lemma 2.5
    // requires the weight to depend only on x, i.e. not on the strip's last axis).
    bool depends_only_on_x(int d) const {
        switch (kind) {
            case WeightKind::Unit: return true;
            case WeightKind::PowerF0: return true;  // depends on x1 only
            case WeightKind::Phi1: return d > 2;    // uses x1, x2
            case WeightKind::Phi0: return d > 2;
            case WeightKind::HeatEvolved: return false;  // heat mixes all axes
            case WeightKind::Shifted: return base->depends_only_on_x(d);
            case WeightKind::ConvG: return false;
        }
        return false;
    }

    std::string canonical() const {
        std::ostringstream os;
        switch (kind) {
            case WeightKind::Unit: os << "unit"; break;
            case WeightKind::PowerF0:
                os << "powerf0:c0=" << format_double(c0, "%.6g") << ",delta=" << format_double(delta, "%.6g");
                break;
            case WeightKind::Phi1:
                os << "phi1:delta=" << format_double(delta, "%.6g") << ",eps=" << format_double(eps, "%.6g");
                break;
            case WeightKind::Phi0:
                os << "phi0:delta=" << format_double(delta, "%.6g") << ",eps=" << format_double(eps, "%.6g");
                break;
            case WeightKind::HeatEvolved:
                os << "heat:mu1=" << format_double(mu1, "%.6g") << ",base=(" << base->canonical() << ")";
                break;
            case WeightKind::Shifted:
                os << (sign > 0 ? "shift+:base=(" : "shift-:base=(") << base->canonical() << ")";
                break;
            case WeightKind::ConvG: os << "convg:base=(" << base->canonical() << ")"; break;
        }
        return os.str();
    }

    static WeightSpec parse(const std::string& text);
};

namespace weights_detail {

inline std::string take_paren(const std::string& s, std::size_t& i) {
    require(i < s.size() && s[i] == '(', "weight parse: expected '('");
    int depth = 0;
    std::size_t start = ++i;
    for (; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        else if (s[i] == ')') {
            if (depth == 0) {
                std::string inner = s.substr(start, i - start);
                ++i;
                return inner;
            }
            --depth;
        }
    }
    fail("weight parse: unbalanced parentheses in '" + s + "'");
}

}  // namespace weights_detail

inline WeightSpec WeightSpec::parse(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    auto head = s.substr(0, s.find(':'));
    std::map<std::string, double> kv;
    std::string base_text;
    if (auto colon = s.find(':'); colon != std::string::npos) {
        std::size_t i = colon + 1;
        while (i < s.size()) {
            auto eq = s.find('=', i);
            require(eq != std::string::npos, "weight parse: expected key=value in '" + text + "'");
            std::string key = s.substr(i, eq - i);
            i = eq + 1;
            if (key == "base") {
                base_text = weights_detail::take_paren(s, i);
            } else {
                std::size_t j = i;
                while (j < s.size() && s[j] != ',') ++j;
                kv[key] = std::stod(s.substr(i, j - i));
                i = j;
            }
            if (i < s.size() && s[i] == ',') ++i;
        }
    }
    auto get = [&](const std::string& k, double dflt) {
        auto it = kv.find(k);
        return it == kv.end() ? dflt : it->second;
    };
    if (head == "unit") return unit();
    if (head == "powerf0") return power_f0(get("c0", 2.0), get("delta", 0.25));
    if (head == "phi1") return phi1(get("delta", 0.25), get("eps", 0.0));
    if (head == "phi0") return phi0(get("delta", 0.25), get("eps", 0.0));
    if (head == "heat") return heat_evolved(parse(base_text), get("mu1", 0.0));
    if (head == "shift+") return shifted(parse(base_text), +1);
    if (head == "shift-") return shifted(parse(base_text), -1);
    if (head == "convg") return conv_g(parse(base_text));
    fail("weight parse: unknown weight kind '" + head + "'");
}

// ---------------------------------------------------------------------------
// Pointwise evaluation.

namespace weights_detail {

// Perpendicular kernel profile: Kp(u) = int_{R^{d-1}} dv / (1 + (u^2+|v|^2)^{(d+1)/2}),
// tabulated once per d on a radial lattice.
inline double kperp(double u, int d) {
    struct Table {
        std::vector<double> val;
        double umax, du;
    };
    static Table tables[2];  // index d-2
    static std::once_flag once[2];
    int ti = d - 2;
    std::call_once(once[ti], [&] {
        Table& T = tables[ti];
        T.umax = 400.0;
        T.du = 0.02;
        std::size_t n = std::size_t(T.umax / T.du) + 2;
        T.val.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double uu = double(i) * T.du;
            if (d == 2) {
                double V = 60.0 + 2 * uu;
                auto f = [&](double v) { return 1.0 / (1.0 + std::pow(uu * uu + v * v, 1.5)); };
                T.val[i] = 2.0 * adaptive_simpson(f, 0.0, V, 1e-11).value + 1.0 / (V * V);
            } else {
                double V = 80.0 + 2 * uu;
                auto f = [&](double v) { return 6.283185307179586 * v / (1.0 + std::pow(uu * uu + v * v, 2.0)); };
                T.val[i] = adaptive_simpson(f, 0.0, V, 1e-11).value + 3.14159265358979 / (V * V);
            }
        }
    });
    const Table& T = tables[ti];
    double au = std::abs(u);
    if (au >= T.umax) {
        // asymptotics: d=2: int dv (u^2+v^2)^{-3/2} = 2/u^2 ; d=3: pi/u^2-ish
        return d == 2 ? 2.0 / (au * au) : 3.14159265358979 / (au * au);
    }
    double s = au / T.du;
    std::size_t i0 = std::size_t(s);
    double t = s - double(i0);
    return T.val[i0] * (1 - t) + T.val[i0 + 1] * t;
}

// e^{-z} I_0(z); std library Bessel below the overflow knee, asymptotic series above
inline double bessel_i0_scaled(double z) {
    if (z < 600.0) return std::exp(-z) * std::cyl_bessel_i(0.0, z);
    double iz = 1.0 / (8.0 * z);
    return (1.0 + iz * (1.0 + iz * (4.5 + iz * 37.5))) / std::sqrt(2.0 * 3.14159265358979323846 * z);
}

// H(a) applied to the radial profile (eps^2 + r^2)^{-p/2} in the plane,
// as a function of rho = |x|:
//   (2a)^{-1} int_0^infty r phi(r) e^{-(rho-r)^2/(4a)} I0~(rho r / (2a)) dr.
// The integrand lives on the Gaussian window |r - rho| <= 14 sqrt(a); when
// that window contains the origin the substitution r = u^4 removes the
// endpoint singularity.
inline double heat_radial_plane(double p, double eps, double a, double rho) {
    double w = 14.0 * std::sqrt(a);
    auto integrand = [&](double r) {
        double phi = std::pow(eps * eps + r * r, -p / 2.0);
        return r * phi * std::exp(-(rho - r) * (rho - r) / (4.0 * a)) *
               bessel_i0_scaled(rho * r / (2.0 * a));
    };
    double lo = rho - w, hi = rho + w;
    double v;
    if (lo > 0.0) {
        double tol = 1e-10 * integrand(rho) * std::sqrt(a) + 1e-300;
        v = adaptive_simpson(integrand, lo, hi, tol, 40).value;
    } else {
        // r = u^4; the jacobian u^3 absorbs the r^{1-p} endpoint behavior,
        // combined analytically so u = 0 never evaluates 0 * inf
        auto g = [&](double u) {
            double u2 = u * u, r = u2 * u2;
            double jac_rphi = eps > 0.0
                                  ? 4.0 * u * u2 * r * std::pow(eps * eps + r * r, -p / 2.0)
                                  : 4.0 * std::pow(u, 7.0 - 4.0 * p);
            return jac_rphi * std::exp(-(rho - r) * (rho - r) / (4.0 * a)) *
                   bessel_i0_scaled(rho * r / (2.0 * a));
        };
        double umax = std::pow(hi, 0.25);
        v = adaptive_simpson(g, 0.0, umax, 1e-11, 42).value;
    }
    return v / (2.0 * a);
}

// 1-D analog for (eps^2 + y^2)^{-q/2} profiles; the result is even in x.
inline double heat_profile_line(double q, double eps, double a, double x) {
    double w = 14.0 * std::sqrt(a);
    double ax = std::abs(x);
    auto prof = [&](double y) { return std::pow(eps * eps + y * y, -q / 2.0); };
    auto kern = [&](double y) { return std::exp(-(ax - y) * (ax - y) / (4.0 * a)); };
    double v;
    if (ax - w > 0.0) {
        auto integrand = [&](double y) { return prof(y) * kern(y); };
        double tol = 1e-10 * integrand(ax) * std::sqrt(a) + 1e-300;
        v = adaptive_simpson(integrand, ax - w, ax + w, tol, 40).value;
    } else {
        // int_0^reach prof(s) kern(sgn s) ds with s = u^4; jacobian folded in
        auto upart = [&](double reach, double sgn) {
            if (reach <= 0.0) return 0.0;
            auto g = [&](double u) {
                double u2 = u * u, s = u2 * u2;
                double jac_prof = eps > 0.0 ? 4.0 * u * u2 * prof(s)
                                            : 4.0 * std::pow(u, 3.0 - 4.0 * q);
                return jac_prof * kern(sgn * s);
            };
            return adaptive_simpson(g, 0.0, std::pow(reach, 0.25), 1e-11, 42).value;
        };
        v = upart(ax + w, +1.0) + upart(w - ax, -1.0);
    }
    return v / std::sqrt(4.0 * 3.14159265358979323846 * a);
}

}  // namespace weights_detail

namespace weights_detail {

// Cached radial profiles of H(a)phi: cubic interpolation on a log(1+rho)
// lattice.  Grid sampling of the evolved weights hits these profiles millions
// of times; the direct quadrature stays available as the precision path.
class HeatProfileTable {
public:
    HeatProfileTable(bool plane, double p, double eps, double a) : a_(a) {
        rho_max_ = 400.0;
        xi_max_ = std::log1p(rho_max_);
        n_ = 1024;
        dxi_ = xi_max_ / (n_ - 1);
        val_.resize(std::size_t(n_));
        parallel_for(std::size_t(n_), [&](std::size_t i) {
            double rho = std::expm1(double(i) * dxi_);
            val_[i] = plane ? heat_radial_plane(p, eps, a, rho) : heat_profile_line(p, eps, a, rho);
        }, 8);
    }

    double eval(double rho) const {
        rho = std::abs(rho);
        if (rho >= rho_max_) return -1.0;  // out of table; caller falls back
        double xi = std::log1p(rho) / dxi_;
        int i0 = int(xi);
        i0 = std::min(std::max(i0 - 1, 0), n_ - 4);
        double t = xi - (i0 + 1);
        double w[4];
        {
            double t1 = t - 1.0, t2 = t - 2.0, tp = t + 1.0;
            w[0] = -t * t1 * t2 / 6.0;
            w[1] = tp * t1 * t2 / 2.0;
            w[2] = -tp * t * t2 / 2.0;
            w[3] = tp * t * t1 / 6.0;
        }
        return w[0] * val_[std::size_t(i0)] + w[1] * val_[std::size_t(i0 + 1)] +
               w[2] * val_[std::size_t(i0 + 2)] + w[3] * val_[std::size_t(i0 + 3)];
    }

private:
    double a_, rho_max_, xi_max_, dxi_;
    int n_;
    std::vector<double> val_;
};

inline const HeatProfileTable& heat_profile_table(bool plane, double p, double eps, double a) {
    static std::mutex mtx;
    static std::map<std::string, std::shared_ptr<HeatProfileTable>> cache;
    char key[96];
    std::snprintf(key, sizeof(key), "%d|%.12g|%.12g|%.12g", int(plane), p, eps, a);
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_shared<HeatProfileTable>(plane, p, eps, a)).first;
    return *it->second;
}

}  // namespace weights_detail

// Heat evolution of the singular weight profiles at evolution time a.
// phi1 depends on (x1,x2) and phi0 on x2 alone, so the d-dimensional heat
// flow reduces to the plane/line kernels regardless of d.  `exact` bypasses
// the cached profile tables.
inline double heat_of_phi1(double delta, double eps, double a, const double* X, bool exact = true) {
    double rho = std::sqrt(X[0] * X[0] + X[1] * X[1]);
    if (!exact) {
        double v = weights_detail::heat_profile_table(true, 1.0 + delta, eps, a).eval(rho);
        if (v >= 0.0) return v;
    }
    return weights_detail::heat_radial_plane(1.0 + delta, eps, a, rho);
}
inline double heat_of_phi0(double delta, double eps, double a, const double* X, bool exact = true) {
    if (!exact) {
        double v = weights_detail::heat_profile_table(false, delta, eps, a).eval(X[1]);
        if (v >= 0.0) return v;
    }
    return weights_detail::heat_profile_line(delta, eps, a, X[1]);
}

inline double weight_eval(const WeightSpec& w, double t, const double* X, int d);

namespace weights_detail {

// g for a base f whose value depends on x1 only (the section-3 family):
// g(t,X) = int P(y1) Kp(x1-y1) dy1 with P(y1) = f0(y1+t) f0(y1-t).
inline double conv_g_eval_1d(const WeightSpec& f, double t, const double* X, int d) {
    auto f0 = [&](double y1) {
        double Y[3] = {y1, 0, 0};
        return weight_eval(f, 0.0, Y, d);
    };
    auto integrand = [&](double y1) { return f0(y1 + t) * f0(y1 - t) * kperp(X[0] - y1, d); };
    double lo = std::min({X[0], -std::abs(t)}) - 60.0;
    double hi = std::max({X[0], std::abs(t)}) + 60.0;
    double v = adaptive_simpson(integrand, lo, X[0], 1e-12, 40).value +
               adaptive_simpson(integrand, X[0], hi, 1e-12, 40).value;
    // power-law remainder beyond [lo,hi]: integrand ~ c |y1|^{-q} with q > 3
    double rem = (integrand(lo) * std::abs(lo) + integrand(hi) * std::abs(hi)) / 2.5;
    return v + rem;
}

// Generic 2-D quadrature fallback (heat-evolved bases): tensor rule over the
// union of the kernel peak at X and the two f-peaks at -+ B0 t.
inline double conv_g_eval_2d(const WeightSpec& f, double t, const double* X, int d) {
    double mu1 = f.kind == WeightKind::HeatEvolved ? f.mu1 : 0.0;
    double R = 8.0 * std::max(1.0, std::sqrt(1.0 + mu1 * std::abs(t)));
    double c1[3] = {X[0], std::abs(t), -std::abs(t)};
    double lo1 = std::min({c1[0], c1[1], c1[2]}) - R, hi1 = std::max({c1[0], c1[1], c1[2]}) + R;
    double lo2 = std::min(X[1], 0.0) - R, hi2 = std::max(X[1], 0.0) + R;
    int n1 = 160, n2 = 96;
    double h1 = (hi1 - lo1) / n1, h2 = (hi2 - lo2) / n2;
    double acc = 0;
    for (int i = 0; i < n1; ++i) {
        double y1 = lo1 + (i + 0.5) * h1;
        for (int j = 0; j < n2; ++j) {
            double y2 = lo2 + (j + 0.5) * h2;
            double Yp[3] = {y1 + t, y2, 0}, Ym[3] = {y1 - t, y2, 0};
            double P = weight_eval(f, t, Yp, d) * weight_eval(f, t, Ym, d);
            double dx1 = X[0] - y1, dx2 = X[1] - y2;
            double r = std::sqrt(dx1 * dx1 + dx2 * dx2);
            acc += P / (1.0 + std::pow(r, double(d + 1))) * h1 * h2;
        }
    }
    return acc;
}

}  // namespace weights_detail

inline double weight_eval(const WeightSpec& w, double t, const double* X, int d) {
    switch (w.kind) {
        case WeightKind::Unit: return 1.0;
        case WeightKind::PowerF0: return std::pow(w.c0 + X[0] * X[0], -(w.delta + 1.0) / 2.0);
        case WeightKind::Phi1: {
            double r2 = w.eps * w.eps + X[0] * X[0] + X[1] * X[1];
            return std::pow(r2, -(1.0 + w.delta) / 2.0);
        }
        case WeightKind::Phi0: {
            double r2 = w.eps * w.eps + X[1] * X[1];
            return std::pow(r2, -w.delta / 2.0);
        }
        case WeightKind::HeatEvolved: {
            double a = 1.0 + 2.0 * w.mu1 * t;
            // singular bases go through the radial kernels (cached profiles);
            // smooth bases through Gauss-Hermite with 32 nodes per axis
            if (w.base->kind == WeightKind::Phi1)
                return heat_of_phi1(w.base->delta, w.base->eps, a, X, /*exact=*/false);
            if (w.base->kind == WeightKind::Phi0)
                return heat_of_phi0(w.base->delta, w.base->eps, a, X, /*exact=*/false);
            double s = 2.0 * std::sqrt(a);
            const GaussHermite& gh = GaussHermite::rule32();
            const int n = int(gh.x.size());
            double acc = 0;
            double Y[3] = {0, 0, 0};
            if (d == 2) {
                for (int i = 0; i < n; ++i) {
                    double wi = gh.w[std::size_t(i)];
                    Y[0] = X[0] - s * gh.x[std::size_t(i)];
                    double row = 0;
                    for (int j = 0; j < n; ++j) {
                        Y[1] = X[1] - s * gh.x[std::size_t(j)];
                        row += gh.w[std::size_t(j)] * weight_eval(*w.base, t, Y, d);
                    }
                    acc += wi * row;
                }
                return acc / 3.14159265358979323846;
            }
            for (int i = 0; i < n; ++i) {
                Y[0] = X[0] - s * gh.x[std::size_t(i)];
                double acc_j = 0;
                for (int j = 0; j < n; ++j) {
                    Y[1] = X[1] - s * gh.x[std::size_t(j)];
                    double acc_k = 0;
                    for (int k = 0; k < n; ++k) {
                        Y[2] = X[2] - s * gh.x[std::size_t(k)];
                        acc_k += gh.w[std::size_t(k)] * weight_eval(*w.base, t, Y, d);
                    }
                    acc_j += gh.w[std::size_t(j)] * acc_k;
                }
                acc += gh.w[std::size_t(i)] * acc_j;
            }
            return acc / std::pow(3.14159265358979323846, 1.5);
        }
        case WeightKind::Shifted: {
            double Y[3] = {X[0] + w.sign * t, X[1], d > 2 ? X[2] : 0.0};
            return weight_eval(*w.base, t, Y, d);
        }
        case WeightKind::ConvG: {
            const WeightSpec& f = *w.base;
            bool x1_only = (f.kind == WeightKind::PowerF0 || f.kind == WeightKind::Unit);
            return x1_only ? weights_detail::conv_g_eval_1d(f, t, X, d)
                           : weights_detail::conv_g_eval_2d(f, t, X, d);
        }
    }
    return 1.0;
}

// ---------------------------------------------------------------------------
// Grid sampling with a process-wide cache (weights are reused heavily by the
// norm estimators; sampling heat-evolved weights is the expensive path).

namespace weights_detail {

// g(t,.) on a whole grid: sample P = f_+ f_- on a padded lattice, convolve
// with 1/(1+|D|^{d+1}) discretely, and add the far tail from a coarse
// annulus.  Truncation follows the padded radius 8*max(1, sqrt(1+mu1 t)).
inline std::vector<double> conv_g_grid(const WeightSpec& gspec, double t, const Grid& g) {
    const WeightSpec& f = *gspec.base;
    const int d = g.d;
    require(d == 2, "conv_g_grid: d=2 sampling path");
    double mu1 = f.kind == WeightKind::HeatEvolved ? f.mu1 : 0.0;
    double pad = 8.0 * std::max(1.0, std::sqrt(1.0 + mu1 * std::abs(t)));
    double Lp = g.L + pad;
    double hx = g.dx;
    int half = int(std::ceil(Lp / hx));
    int npad = 2 * half + 1;

    // P on the padded lattice
    std::vector<double> P(std::size_t(npad) * std::size_t(npad));
    parallel_for(P.size(), [&](std::size_t k) {
        int i = int(k % std::size_t(npad)), j = int(k / std::size_t(npad));
        double y1 = (i - half) * hx, y2 = (j - half) * hx;
        double Yp[3] = {y1 + t, y2, 0}, Ym[3] = {y1 - t, y2, 0};
        P[k] = weight_eval(f, t, Yp, d) * weight_eval(f, t, Ym, d);
    }, 16);

    // coarse far annulus, spacing 4h out to 2 Lp, sampled once
    double hc = 4.0 * hx;
    int halfc = int(std::ceil(2.0 * Lp / hc));
    std::vector<double> far_p, far_y1, far_y2;
    for (int j = -halfc; j <= halfc; ++j)
        for (int i = -halfc; i <= halfc; ++i) {
            double y1 = i * hc, y2 = j * hc;
            if (std::max(std::abs(y1), std::abs(y2)) <= Lp) continue;
            far_y1.push_back(y1);
            far_y2.push_back(y2);
            far_p.push_back(0.0);
        }
    parallel_for(far_p.size(), [&](std::size_t k) {
        double Yp[3] = {far_y1[k] + t, far_y2[k], 0}, Ym[3] = {far_y1[k] - t, far_y2[k], 0};
        far_p[k] = weight_eval(f, t, Yp, d) * weight_eval(f, t, Ym, d) * hc * hc;
    }, 16);

    std::size_t nc = g.node_count();
    std::vector<double> out(nc);
    double cell = hx * hx;
    parallel_for(nc, [&](std::size_t idx) {
        double X[3];
        g.coords(idx, X);
        double acc = 0;
        for (int j = 0; j < npad; ++j) {
            double dy = X[1] - (j - half) * hx;
            const double* Prow = &P[std::size_t(j) * std::size_t(npad)];
            for (int i = 0; i < npad; ++i) {
                double dxo = X[0] - (i - half) * hx;
                double r2 = dxo * dxo + dy * dy;
                acc += Prow[std::size_t(i)] / (1.0 + r2 * std::sqrt(r2)) * cell;
            }
        }
        for (std::size_t k = 0; k < far_p.size(); ++k) {
            double dxo = X[0] - far_y1[k], dy = X[1] - far_y2[k];
            double r2 = dxo * dxo + dy * dy;
            acc += far_p[k] / (1.0 + r2 * std::sqrt(r2));
        }
        out[idx] = acc;
    }, 8);
    return out;
}

}  // namespace weights_detail

inline std::shared_ptr<const std::vector<double>> weight_grid(const WeightSpec& w, double t, const Grid& g) {
    static std::mutex mtx;
    static std::map<std::string, std::shared_ptr<const std::vector<double>>> cache;
    std::string key = w.canonical() + "|" + format_double(t, "%.12g") + "|" + g.describe();
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    std::shared_ptr<std::vector<double>> vals;
    if (w.kind == WeightKind::ConvG && g.d == 2) {
        vals = std::make_shared<std::vector<double>>(weights_detail::conv_g_grid(w, t, g));
    } else {
        vals = std::make_shared<std::vector<double>>(g.node_count());
        std::size_t nc = g.node_count();
        parallel_for(nc, [&](std::size_t i) {
            double X[3];
            g.coords(i, X);
            (*vals)[i] = weight_eval(w, t, X, g.d);
        }, 16);
    }
    for (double v : *vals)
        require(v > 1e-300 && std::isfinite(v), "weight grid: weight underflow or non-finite value");
    std::lock_guard<std::mutex> lock(mtx);
    cache[key] = vals;
    return vals;
}

// ---------------------------------------------------------------------------
// delta(T) = sup_Y int_{-T}^{T} f(Y + 2 B0 t) dt   (condition (3.2), line 1)

inline double delta_T(const WeightSpec& f, double T, double sample_halfwidth = 32.0) {
    require(T > 0, "delta_T: T > 0 required");
    int d = 2;
    double best = 0;
    bool x1_only = (f.kind == WeightKind::PowerF0 || f.kind == WeightKind::Unit);
    int n1 = 41, n2 = x1_only ? 1 : 9;
    for (int i = 0; i < n1; ++i) {
        double y1 = -sample_halfwidth + 2 * sample_halfwidth * i / (n1 - 1);
        for (int j = 0; j < n2; ++j) {
            double y2 = n2 == 1 ? 0.0 : -sample_halfwidth / 4 + sample_halfwidth / 2 * j / (n2 - 1);
            auto integrand = [&](double t) {
                double Y[3] = {y1 + 2 * t, y2, 0};
                return weight_eval(f, 0.0, Y, d);
            };
            auto q = adaptive_simpson(integrand, -T, T, 1e-11, 44);
            require(q.converged || q.err_estimate < 1e-6 * std::max(1.0, q.value),
                    "delta_T: quadrature failed to converge (err=" + format_double(q.err_estimate) + ")");
            best = std::max(best, q.value);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Structural checks.  Constants in the paper are existential, so a check
// reports the sampled supremum of the relevant functional together with the
// bound it is held against; pass means value <= bound * (1 + slack).

struct WeightCheckReport {
    std::string condition;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;

    static WeightCheckReport make(std::string cond, double value, double bound, double slack = 0.05) {
        WeightCheckReport r;
        r.condition = std::move(cond);
        r.value = value;
        r.bound = bound;
        r.pass = std::isfinite(value) && value <= bound * (1.0 + slack);
        return r;
    }
    std::string csv_row() const {
        return condition + "," + format_double(value, "%.6e") + "," + format_double(bound, "%.6e") + "," +
               (pass ? "1" : "0");
    }
};

// The three lines of condition (3.2) for the section-3 weight family.
// C1 is the caller's candidate constant for the first two lines; the third
// line carries the fixed constant 2 from the paper.
inline std::vector<WeightCheckReport> check_ass_f(const WeightSpec& f, double C1) {
    require(f.kind == WeightKind::PowerF0, "check_ass_f: f must be a PowerF0 weight");
    const int d = 2;
    std::vector<WeightCheckReport> out;

    // line 1: delta(T) <= C1 uniformly in T.  The tail of delta(T) closes like
    // T^{-delta}, so saturation is checked against the analytic T->infinity
    // limit delta_inf = int_0^inf f0 rather than between two finite T.
    double d10 = delta_T(f, 10.0), d100 = delta_T(f, 100.0);
    double B = 1e4;
    double head = adaptive_simpson(
        [&](double r) { return std::pow(f.c0 + r * r, -(f.delta + 1.0) / 2.0); }, 0.0, B, 1e-12, 44).value;
    double delta_inf = head + std::pow(B, -f.delta) / f.delta;
    auto r1 = WeightCheckReport::make("ass_f.delta_T", d100, C1);
    r1.pass = r1.pass && d10 <= d100 * (1 + 1e-12) && d100 <= delta_inf * (1 + 1e-9);
    out.push_back(r1);

    // line 2: int f(Y)/(1+|X-Y|^{d+1}) dY <= C1 f(X)
    double worst = 0;
    for (int i = 0; i < 17; ++i) {
        double x1 = -32.0 + 4.0 * i;
        double X[3] = {x1, 0, 0};
        auto integrand = [&](double y1) {
            double Y[3] = {y1, 0, 0};
            return weight_eval(f, 0, Y, d) * weights_detail::kperp(x1 - y1, d);
        };
        double v = adaptive_simpson(integrand, x1 - 80.0 - std::abs(x1), x1, 1e-11).value +
                   adaptive_simpson(integrand, x1, x1 + 80.0 + std::abs(x1), 1e-11).value;
        worst = std::max(worst, v / weight_eval(f, 0, X, d));
    }
    out.push_back(WeightCheckReport::make("ass_f.convolution", worst, C1));

    // line 3: f(X) <= 2 f(Y) whenever |X-Y| <= 2
    double worst3 = 0;
    for (int i = 0; i <= 400; ++i) {
        double x1 = -20.0 + 0.1 * i;
        for (int k = -20; k <= 20; ++k) {
            double y1 = x1 + 0.1 * k;
            double X[3] = {x1, 0, 0}, Y[3] = {y1, 0, 0};
            worst3 = std::max(worst3, weight_eval(f, 0, X, d) / weight_eval(f, 0, Y, d));
        }
    }
    out.push_back(WeightCheckReport::make("ass_f.doubling", worst3, 2.0));
    return out;
}

// Lemma 3.3, three inequalities for g(t,X); reports the measured constants.
inline std::vector<WeightCheckReport> check_lemma33(const WeightSpec& f, double T, double C_ref = 64.0) {
    require(f.kind == WeightKind::PowerF0, "check_lemma33: stationary PowerF0 family expected");
    const int d = 2;
    WeightSpec g = WeightSpec::conv_g(f);
    std::vector<WeightCheckReport> out;

    auto gv = [&](double t, double x1, double x2) {
        double X[3] = {x1, x2, 0};
        return weight_eval(g, t, X, d);
    };
    auto fv = [&](double x1) {
        double X[3] = {x1, 0, 0};
        return weight_eval(f, 0, X, d);
    };

    // (i) f(X+B0 t) f(X-B0 t) <= C g(t,X)
    double c1 = 0;
    for (double t : {0.0, 1.0, 4.0, T}) {
        for (int i = 0; i < 9; ++i) {
            double x1 = -16.0 + 4.0 * i;
            c1 = std::max(c1, fv(x1 + t) * fv(x1 - t) / gv(t, x1, 0.0));
        }
    }
    out.push_back(WeightCheckReport::make("L3.3.lower", c1, C_ref));

    // (ii) g(t,X) <= C (1+|X-Y|)^{d+1} g(t,Y)
    double c2 = 0;
    {
        double t = T / 2;
        double xs[5] = {-8, -2, 0, 3, 9};
        for (double x1 : xs)
            for (double y1 : xs) {
                double r = std::abs(x1 - y1);
                c2 = std::max(c2, gv(t, x1, 0.5) / (std::pow(1.0 + r, d + 1) * gv(t, y1, 0.5)));
            }
    }
    out.push_back(WeightCheckReport::make("L3.3.comparability", c2, C_ref));

    // (iii) int_{-T}^{T} g(t, X +- B0 t) dt <= C delta(T) f(X)
    double dT = delta_T(f, T);
    double c3 = 0;
    for (int sgn : {+1, -1}) {
        for (double x1 : {-6.0, 0.0, 5.0}) {
            auto integrand = [&](double t) { return gv(t, x1 + sgn * t, 0.0); };
            double v = adaptive_simpson(integrand, -T, T, 1e-9, 36).value;
            c3 = std::max(c3, v / (dT * fv(x1)));
        }
    }
    out.push_back(WeightCheckReport::make("L3.3.time-integral", c3, C_ref));
    return out;
}

}  // namespace mhdlab

#pragma once

// 1-D quadrature helpers: adaptive Simpson and Gauss-Hermite nodes.

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "util.hpp"

namespace mhdlab {

struct QuadResult {
    double value = 0.0;
    double err_estimate = 0.0;
    bool converged = true;
};

namespace detail {

template <class Fn>
double adaptive_simpson_rec(Fn& f, double a, double b, double fa, double fm, double fb, double whole,
                            double tol, int depth, bool& ok, double& err_acc) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0) {
        ok = false;
        err_acc += std::abs(delta);
        return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * tol) {
        err_acc += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1, ok, err_acc) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1, ok, err_acc);
}

}  // namespace detail

template <class Fn>
QuadResult adaptive_simpson(Fn&& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    QuadResult r;
    if (a == b) return r;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
    bool ok = true;
    double err = 0;
    r.value = detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, ok, err);
    r.err_estimate = err;
    r.converged = ok;
    return r;
}

// Composite Simpson on a fixed odd number of samples (>= 3).
inline double simpson_fixed(std::span<const double> samples, double h) {
    std::size_t n = samples.size();
    require(n >= 3 && n % 2 == 1, "simpson_fixed: odd sample count >= 3 required");
    double s = samples[0] + samples[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) s += samples[i] * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Gauss-Hermite rule: integrates exactly int e^{-x^2} p(x) dx for
// polynomials p up to degree 2n-1.  Nodes by Newton iteration on the
// Hermite recurrence (standard construction).
struct GaussHermite {
    std::vector<double> x, w;

    explicit GaussHermite(int n) {
        x.resize(std::size_t(n));
        w.resize(std::size_t(n));
        const double pim4 = 0.7511255444649425;  // pi^{-1/4}
        double z = 0;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            if (i == 0)
                z = std::sqrt(double(2 * n + 1)) - 1.85575 * std::pow(double(2 * n + 1), -0.16667);
            else if (i == 1)
                z -= 1.14 * std::pow(double(n), 0.426) / z;
            else if (i == 2)
                z = 1.86 * z - 0.86 * x[0];
            else if (i == 3)
                z = 1.91 * z - 0.91 * x[1];
            else
                z = 2.0 * z - x[std::size_t(i - 2)];
            double pp = 0;
            for (int it = 0; it < 200; ++it) {
                double p1 = pim4, p2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                double z1 = z;
                z = z1 - p1 / pp;
                if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
            }
            x[std::size_t(i)] = z;
            x[std::size_t(n - 1 - i)] = -z;
            w[std::size_t(i)] = 2.0 / (pp * pp);
            w[std::size_t(n - 1 - i)] = w[std::size_t(i)];
        }
        if (n % 2 == 1) x[std::size_t(n / 2)] = 0.0;
    }

    static const GaussHermite& rule32() {
        static const GaussHermite r(32);
        return r;
    }
};

}  // namespace mhdlab

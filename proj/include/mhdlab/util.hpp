#pragma once

// Shared small utilities: deterministic RNG streams, thread parallelism,
// small dense matrices, formatting helpers.

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mhdlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

inline std::uint64_t hash_str(const std::string& s, std::uint64_t seed = 0) {
    std::uint64_t h = seed ^ 0xcbf29ce484222325ULL;
    for (unsigned char c : s) h = splitmix64(h ^ c);
    return h;
}

// Counter-based RNG: a stream is (seed, arbitrary labels); draws are
// indexed, so any draw is reproducible independently of evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : state_(splitmix64(hash_mix(seed, stream))) {}

    std::uint64_t next_u64() { return state_ = splitmix64(state_); }

    double uniform() {  // in [0,1)
        return double(next_u64() >> 11) * 0x1.0p-53;
    }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double gaussian() {  // Box-Muller, one value per call (second discarded for determinism)
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Parallelism.  Work is split into fixed index ranges, so the result of any
// reduction done per-index is independent of the worker count.

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{0};  // 0 = use hardware_concurrency
    return n;
}
}  // namespace detail

inline void set_thread_count(int n) { detail::thread_count_slot().store(n); }

inline int thread_count() {
    int n = detail::thread_count_slot().load();
    if (n > 0) return n;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_per_thread = 1024) {
    int nt = thread_count();
    if (nt <= 1 || n <= min_per_thread) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t chunks = std::min<std::size_t>(std::size_t(nt), (n + min_per_thread - 1) / min_per_thread);
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    std::size_t per = (n + chunks - 1) / chunks;
    std::exception_ptr err;
    std::mutex err_mtx;
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t lo = c * per, hi = std::min(n, lo + per);
        workers.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mtx);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Small dense d x d matrix (d <= 3), row-major, entry(i,j) = a[i*d+j].

struct MatD {
    int d = 2;
    std::array<double, 9> a{};

    double& operator()(int i, int j) { return a[std::size_t(i * d + j)]; }
    double operator()(int i, int j) const { return a[std::size_t(i * d + j)]; }

    static MatD identity(int d) {
        MatD m;
        m.d = d;
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }
    MatD operator*(const MatD& o) const {
        MatD r;
        r.d = d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0;
                for (int k = 0; k < d; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    MatD operator-(const MatD& o) const {
        MatD r = *this;
        for (int i = 0; i < d * d; ++i) r.a[std::size_t(i)] -= o.a[std::size_t(i)];
        return r;
    }
    MatD& operator+=(const MatD& o) {
        for (int i = 0; i < d * d; ++i) a[std::size_t(i)] += o.a[std::size_t(i)];
        return *this;
    }
    MatD scaled(double s) const {
        MatD r = *this;
        for (int i = 0; i < d * d; ++i) r.a[std::size_t(i)] *= s;
        return r;
    }
    double det() const {
        if (d == 2) return a[0] * a[3] - a[1] * a[2];
        return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
               a[2] * (a[3] * a[7] - a[4] * a[6]);
    }
};

// Operator (spectral) norm sup_{|x|=1}|Ax|: sqrt of largest eigenvalue of A^T A.
inline double op_norm(const MatD& m) {
    int d = m.d;
    double g[9] = {0,0,0,0,0,0,0,0,0};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0;
            for (int k = 0; k < d; ++k) s += m(k, i) * m(k, j);
            g[i * d + j] = s;
        }
    if (d == 1) return std::sqrt(g[0]);
    if (d == 2) {
        double tr = g[0] + g[3], dt = g[0] * g[3] - g[1] * g[2];
        double disc = std::max(0.0, tr * tr / 4 - dt);
        return std::sqrt(std::max(0.0, tr / 2 + std::sqrt(disc)));
    }
    // d == 3: power iteration on G (symmetric PSD), fixed iteration count
    double v[3] = {1.0, 0.7, 0.4}, w[3];
    double lam = 0;
    for (int it = 0; it < 60; ++it) {
        for (int i = 0; i < 3; ++i) w[i] = g[3 * i] * v[0] + g[3 * i + 1] * v[1] + g[3 * i + 2] * v[2];
        double nrm = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
        if (nrm < 1e-300) return 0.0;
        for (int i = 0; i < 3; ++i) v[i] = w[i] / nrm;
        lam = nrm;
    }
    return std::sqrt(lam);
}

// ---------------------------------------------------------------------------

inline std::string format_double(double v, const char* fmt = "%.10e") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace mhdlab

// scratch diagnostic: commutator forms vs FFT oracle
#include <cstdio>
#include "mhdlab/integral_ops.hpp"
#include "torus_oracle.hpp"
using namespace mhdlab;
static constexpr double kPi = 3.14159265358979323846;
ScalarField low_band(const Grid& g, std::uint64_t seed, int kmax = 3, double k0 = 1.5) {
    Rng rng(seed);
    std::vector<double> ac, as, kx, ky;
    for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = 0; k2 <= kmax; ++k2) {
            if (k2 == 0 && k1 <= 0) continue;
            double amp = std::exp(-0.5 * (k1*k1 + k2*k2)/(k0*k0));
            ac.push_back(amp*rng.gaussian()); as.push_back(amp*rng.gaussian());
            kx.push_back(kPi*k1/g.L); ky.push_back(kPi*k2/g.L);
        }
    return ScalarField::sample(g, [&](const double* X){
        double v=0; for (std::size_t m=0;m<ac.size();++m){double p=kx[m]*X[0]+ky[m]*X[1]; v+=ac[m]*std::cos(p)+as[m]*std::sin(p);} return v; });
}
int main() {
    Grid g = Grid::torus(2, kPi, 128);
    ScalarField u = low_band(g, 52), w = low_band(g, 51);
    for (auto [i,j,k] : {std::array{0,1,0}, std::array{0,0,1}, std::array{1,1,0}}) {
        ScalarField ref = oracle::commutator_fft(u, w, i, j, k);
        double scale = ref.max_abs();
        // form A: parts (current production path)
        ScalarField a = riesz_commutator(u, w, i, j, k);
        // form B: first display, pair pass with discrete dkw
        ScalarField dkw = derivative(w, k);
        auto t_pl = iops_detail::riesz_table(g, i, j, -1);
        ScalarField b(g);
        iops_detail::apply_pair_pass(g, *t_pl, 0, u.values.data(), dkw.values.data(), b.values.data(), -1.0);
        // form C: composition of riesz_second (uses the corrected dyadic riesz)
        ScalarField c = pointwise_mul(u, riesz_second(dkw, i, j));
        ScalarField c2 = riesz_second(pointwise_mul(u, dkw), i, j);
        c -= c2;
        auto rel = [&](const ScalarField& f){ ScalarField d=f; d-=ref; return d.max_abs()/scale; };
        std::printf("(%d%d%d): parts=%.4e first=%.4e comp=%.4e scale=%.3g\n", i,j,k, rel(a), rel(b), rel(c), scale);
    }
    return 0;
}

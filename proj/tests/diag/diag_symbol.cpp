// measure the discrete riesz transfer function vs exact symbol per mode
#include <cstdio>
#include "mhdlab/integral_ops.hpp"
using namespace mhdlab;
static constexpr double kPi = 3.14159265358979323846;
int main() {
    Grid g = Grid::torus(2, kPi, 128);
    for (auto [i,j] : {std::pair{0,0}, std::pair{0,1}}) {
        std::printf("---- (i,j)=(%d,%d)\n", i, j);
        for (auto [k1,k2] : {std::pair{1,0},std::pair{2,1},std::pair{3,2},std::pair{4,3},std::pair{6,2},std::pair{6,5},std::pair{8,3}}) {
            double xi1 = kPi*k1/g.L, xi2 = kPi*k2/g.L;
            ScalarField w = ScalarField::sample(g, [&](const double* X){ return std::cos(xi1*X[0]+xi2*X[1]); });
            ScalarField r = riesz_second(w, i, j);
            // exact: -xi_i xi_j/|xi|^2 * w
            double q2 = xi1*xi1+xi2*xi2;
            double xii = i==0?xi1:xi2, xij = j==0?xi1:xi2;
            double sym = -xii*xij/q2;
            // measured multiplier: project r onto w
            double num=0, den=0;
            for (std::size_t n=0;n<w.values.size();++n){ num += r.values[n]*w.values[n]; den += w.values[n]*w.values[n]; }
            double meas = num/den;
            // residual orthogonal part
            ScalarField resid = r; for (std::size_t n=0;n<resid.values.size();++n) resid.values[n] -= meas*w.values[n];
            std::printf("k=(%d,%d) sym=%+.6f meas=%+.6f err=%.2e ortho=%.2e\n", k1,k2, sym, meas, std::abs(meas-sym), resid.max_abs());
        }
    }
    return 0;
}

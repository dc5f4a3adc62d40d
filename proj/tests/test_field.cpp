#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mhdlab/field.hpp"
#include "mhdlab/field_io.hpp"

using namespace mhdlab;

namespace {
constexpr double kPi = 3.14159265358979323846;

// small band-limited test function with analytic derivatives
double psi_fn(const double* X, double L) {
    double a = kPi / L;
    return std::sin(a * X[0]) * std::cos(2 * a * X[1]) + 0.3 * std::cos(3 * a * X[0]) * std::sin(a * X[1]);
}
double psi_dx(const double* X, double L) {
    double a = kPi / L;
    return a * std::cos(a * X[0]) * std::cos(2 * a * X[1]) - 0.9 * a * std::sin(3 * a * X[0]) * std::sin(a * X[1]);
}
double psi_dy(const double* X, double L) {
    double a = kPi / L;
    return -2 * a * std::sin(a * X[0]) * std::sin(2 * a * X[1]) + 0.3 * a * std::cos(3 * a * X[0]) * std::cos(a * X[1]);
}
}  // namespace

TEST_CASE("gradient: constant field gives zero") {
    Grid g = Grid::free_box(2, 4.0, 16);
    ScalarField u = ScalarField::sample(g, [](const double*) { return 3.25; });
    VectorField gr = gradient(u);
    CHECK(gr.max_abs() == 0.0);
}

TEST_CASE("gradient: linear field on free box is exact to rounding") {
    Grid g = Grid::free_box(2, 4.0, 16);
    ScalarField u = ScalarField::sample(g, [](const double* X) { return X[0]; });
    VectorField gr = gradient(u);
    ScalarField e0 = gr.comp[0];
    for (double& v : e0.values) v -= 1.0;
    CHECK(e0.max_abs() < 1e-12);
    CHECK(gr.comp[1].max_abs() < 1e-12);
}

TEST_CASE("gradient: Richardson refinement on the torus shows 4th order") {
    auto err = [&](int n) {
        Grid g = Grid::torus(2, kPi, n);
        ScalarField u = ScalarField::sample(g, [&](const double* X) { return std::sin(X[0]); });
        VectorField gr = gradient(u);
        double m = 0;
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            double X[3];
            g.coords(i, X);
            m = std::max(m, std::abs(gr.comp[0].values[i] - std::cos(X[0])));
        }
        return m;
    };
    double e64 = err(64), e128 = err(128);
    INFO("e64=" << e64 << " e128=" << e128);
    CHECK(e64 / e128 >= 15.0);
}

TEST_CASE("divergence of a discrete stream-function field vanishes to rounding") {
    // stencils along different axes commute, so div(-d2 psi, d1 psi) is exact
    Grid g = Grid::torus(2, 2.0, 32);
    ScalarField psi = ScalarField::sample(g, [&](const double* X) { return psi_fn(X, 2.0); });
    VectorField z(g);
    z.comp[0] = derivative(psi, 1);
    z.comp[0] *= -1.0;
    z.comp[1] = derivative(psi, 0);
    ScalarField dv = divergence(z);
    CHECK(dv.max_abs() < 1e-12 * std::max(1.0, psi.max_abs()));
}

TEST_CASE("divergence of sampled analytic stream field shrinks >= 15x under refinement") {
    auto maxdiv = [&](int n) {
        Grid g = Grid::torus(2, 2.0, n);
        VectorField z = VectorField::sample(g, [&](const double* X, double* out) {
            out[0] = -psi_dy(X, 2.0);
            out[1] = psi_dx(X, 2.0);
        });
        return divergence(z).max_abs();
    };
    double e1 = maxdiv(48), e2 = maxdiv(96);
    INFO("e48=" << e1 << " e96=" << e2);
    CHECK(e1 / e2 >= 15.0);
}

TEST_CASE("divergence: exact linear cases") {
    Grid g = Grid::free_box(2, 4.0, 16);
    VectorField z1 = VectorField::sample(g, [](const double* X, double* o) {
        o[0] = X[0];
        o[1] = -X[1];
    });
    CHECK(divergence(z1).max_abs() < 1e-12);

    VectorField z2 = VectorField::sample(g, [](const double* X, double* o) {
        o[0] = X[0];
        o[1] = X[1];
    });
    ScalarField dv = divergence(z2);
    for (double v : dv.values) CHECK(v == Catch::Approx(2.0).margin(1e-11));
}

TEST_CASE("curl convention: z=(-x2, x1) has single entry -2") {
    Grid g = Grid::free_box(2, 4.0, 16);
    VectorField z = VectorField::sample(g, [](const double* X, double* o) {
        o[0] = -X[1];
        o[1] = X[0];
    });
    CurlField c = curl(z);
    REQUIRE(c.entry.size() == 1);
    for (double v : c.entry[0].values) CHECK(v == Catch::Approx(-2.0).margin(1e-11));
}

TEST_CASE("curl of a gradient vanishes to discretization error") {
    Grid g = Grid::torus(2, 2.0, 64);
    ScalarField phi = ScalarField::sample(g, [&](const double* X) { return psi_fn(X, 2.0); });
    CurlField c = curl(gradient(phi));
    CHECK(c.max_abs() < 1e-10);  // commuting stencils: rounding level
    VectorField zero(g);
    CHECK(curl(zero).max_abs() == 0.0);
}

TEST_CASE("curl in 3d: smoke cases") {
    Grid g = Grid::free_box(3, 2.0, 8);
    VectorField z = VectorField::sample(g, [](const double* X, double* o) {
        o[0] = X[1];
        o[1] = X[2];
        o[2] = X[0];
    });
    CurlField c = curl(z);
    REQUIRE(c.entry.size() == 3);
    // entries (j,k): d_k z^j - d_j z^k: (0,1): 1-0=1; (0,2): 0-1=-1; (1,2): 1-0=1
    for (double v : c.entry[0].values) CHECK(v == Catch::Approx(1.0).margin(1e-10));
    for (double v : c.entry[1].values) CHECK(v == Catch::Approx(-1.0).margin(1e-10));
    for (double v : c.entry[2].values) CHECK(v == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("operators are linear") {
    Grid g = Grid::torus(2, 2.0, 32);
    ScalarField u = ScalarField::sample(g, [&](const double* X) { return psi_fn(X, 2.0); });
    ScalarField w = ScalarField::sample(g, [&](const double* X) { return psi_dx(X, 2.0); });
    double a = 1.7, b = -0.4;
    ScalarField lin = a * u + b * w;
    VectorField g1 = gradient(lin);
    VectorField g2 = gradient(u);
    g2 *= a;
    VectorField g3 = gradient(w);
    g3 *= b;
    g2 += g3;
    g1 -= g2;
    CHECK(g1.max_abs() < 1e-12);
}

TEST_CASE("gradient rejects non-finite input") {
    Grid g = Grid::free_box(2, 2.0, 8);
    ScalarField u(g);
    u.values[5] = std::nan("");
    CHECK_THROWS(gradient(u));
}

TEST_CASE("strip fields must extend before differentiation") {
    Grid g = Grid::strip(2, 8.0, 64);
    ScalarField u(g, 1.0);
    CHECK_THROWS(gradient(u));
}

TEST_CASE("interpolation reproduces cubics exactly") {
    Grid g = Grid::free_box(2, 4.0, 16);
    ScalarField u = ScalarField::sample(g, [](const double* X) { return X[0] * X[0] * X[0]; });
    double pts[] = {0.37, 0.2, -3.9, 1.83, 3.999, -3.999};
    auto r = interpolate(u, std::span<const double>(pts, 6));
    CHECK(r.clamped == 0);
    for (int k = 0; k < 3; ++k) {
        double x = pts[2 * k];
        CHECK(r.values[std::size_t(k)] == Catch::Approx(x * x * x).margin(1e-10));
    }
}

TEST_CASE("interpolation is exact at grid nodes") {
    Grid g = Grid::torus(2, 2.0, 16);
    ScalarField u = ScalarField::sample(g, [&](const double* X) { return psi_fn(X, 2.0); });
    for (std::size_t i : {std::size_t(0), std::size_t(37), std::size_t(200)}) {
        double X[3];
        g.coords(i, X);
        CHECK(interp_at(u, X) == u.values[i]);
    }
}

TEST_CASE("interpolation error refines at 4th order") {
    auto err = [&](int n) {
        Grid g = Grid::torus(2, kPi, n);
        ScalarField u = ScalarField::sample(g, [](const double* X) { return std::sin(X[0]) * std::cos(X[1]); });
        Rng rng(1234);
        double m = 0;
        for (int k = 0; k < 500; ++k) {
            double X[3] = {rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), 0};
            m = std::max(m, std::abs(interp_at(u, X) - std::sin(X[0]) * std::cos(X[1])));
        }
        return m;
    };
    double e1 = err(32), e2 = err(64);
    INFO("e32=" << e1 << " e64=" << e2);
    CHECK(e1 / e2 >= 12.0);  // same points land differently; 16x up to sampling wobble
}

TEST_CASE("out-of-box interpolation clamps and counts") {
    Grid g = Grid::free_box(2, 2.0, 8);
    ScalarField u = ScalarField::sample(g, [](const double* X) { return X[0]; });
    double pts[] = {5.0, 0.0};
    auto r = interpolate(u, std::span<const double>(pts, 2));
    CHECK(r.clamped == 1);
    CHECK(r.values[0] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("field file round-trip preserves bytes and grid") {
    Grid g = Grid::torus(2, 2.0, 16);
    ScalarField u = ScalarField::sample(g, [&](const double* X) { return psi_fn(X, 2.0); });
    auto path = std::filesystem::temp_directory_path() / "mhdlab_test_field.afld";
    save_field(u, path.string());
    ScalarField v = load_field(path.string());
    REQUIRE(v.grid == g);
    CHECK(v.values == u.values);
    std::filesystem::remove(path);
}

TEST_CASE("csv export writes one row per node") {
    Grid g = Grid::free_box(2, 1.0, 8);
    ScalarField u(g, 1.0);
    auto path = std::filesystem::temp_directory_path() / "mhdlab_test_field.csv";
    export_csv(u, path.string());
    std::ifstream is(path);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == g.node_count() + 1);
    std::filesystem::remove(path);
}

TEST_CASE("laplacian matches analytic value on torus") {
    Grid g = Grid::torus(2, kPi, 64);
    ScalarField u = ScalarField::sample(g, [](const double* X) { return std::sin(X[0]) * std::sin(X[1]); });
    ScalarField lap = laplacian(u);
    double m = 0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        double X[3];
        g.coords(i, X);
        m = std::max(m, std::abs(lap.values[i] + 2.0 * std::sin(X[0]) * std::sin(X[1])));
    }
    CHECK(m < 5e-5);
}

TEST_CASE("divergence_rows reconstructs a stream-function field") {
    Grid g = Grid::torus(2, 2.0, 32);
    CurlField psi(g);
    psi.entry[0] = ScalarField::sample(g, [&](const double* X) { return psi_fn(X, 2.0); });
    VectorField z = divergence_rows(psi);
    // z^0 = d1 psi, z^1 = -d0 psi
    ScalarField e0 = z.comp[0] - derivative(psi.entry[0], 1);
    ScalarField e1 = z.comp[1] + derivative(psi.entry[0], 0);
    CHECK(e0.max_abs() == 0.0);
    CHECK(e1.max_abs() == 0.0);
    CHECK(divergence(z).max_abs() < 1e-12);
}

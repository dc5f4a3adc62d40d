#pragma once

// Field serialization: 32-byte header {magic "AFLD", d, N, L, geometry tag}
// followed by the flat little-endian float64 value array.  CSV export lists
// node coordinates and the value.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "field.hpp"

namespace mhdlab {

namespace detail {

#pragma pack(push, 1)
struct FieldHeader {
    char magic[4];        // "AFLD"
    std::uint32_t d;
    std::uint32_t n;
    double L;
    std::uint32_t geom;
    std::uint8_t reserved[8];
};
#pragma pack(pop)
static_assert(sizeof(FieldHeader) == 32, "field header must be 32 bytes");

inline bool host_is_little_endian() {
    const std::uint32_t x = 1;
    return *reinterpret_cast<const std::uint8_t*>(&x) == 1;
}

}  // namespace detail

inline void save_field(const ScalarField& f, const std::string& path) {
    require(detail::host_is_little_endian(), "field io: little-endian host required");
    detail::FieldHeader h{};
    std::memcpy(h.magic, "AFLD", 4);
    h.d = std::uint32_t(f.grid.d);
    h.n = std::uint32_t(f.grid.n);
    h.L = f.grid.L;
    h.geom = std::uint32_t(f.grid.geom);
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "field io: cannot open " + path);
    os.write(reinterpret_cast<const char*>(&h), sizeof(h));
    os.write(reinterpret_cast<const char*>(f.values.data()),
             std::streamsize(f.values.size() * sizeof(double)));
    require(bool(os), "field io: write failed for " + path);
}

inline ScalarField load_field(const std::string& path) {
    require(detail::host_is_little_endian(), "field io: little-endian host required");
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "field io: cannot open " + path);
    detail::FieldHeader h{};
    is.read(reinterpret_cast<char*>(&h), sizeof(h));
    require(bool(is) && std::memcmp(h.magic, "AFLD", 4) == 0, "field io: bad magic in " + path);
    Grid g = Grid::make(int(h.d), h.L, int(h.n), Geometry(h.geom));
    ScalarField f(g);
    is.read(reinterpret_cast<char*>(f.values.data()), std::streamsize(f.values.size() * sizeof(double)));
    require(bool(is), "field io: truncated file " + path);
    require(f.all_finite(), "field io: non-finite values in " + path);
    return f;
}

inline void save_vector_field(const VectorField& f, const std::string& path_prefix) {
    for (int c = 0; c < f.grid.d; ++c)
        save_field(f.comp[std::size_t(c)], path_prefix + "_c" + std::to_string(c) + ".afld");
}

inline VectorField load_vector_field(const Grid& g, const std::string& path_prefix) {
    VectorField f(g);
    for (int c = 0; c < g.d; ++c) {
        f.comp[std::size_t(c)] = load_field(path_prefix + "_c" + std::to_string(c) + ".afld");
        require(f.comp[std::size_t(c)].grid == g, "vector field io: grid mismatch across components");
    }
    return f;
}

inline void export_csv(const ScalarField& f, const std::string& path) {
    std::ofstream os(path);
    require(bool(os), "csv export: cannot open " + path);
    const Grid& g = f.grid;
    for (int a = 0; a < g.d; ++a) os << "x" << a << ",";
    os << "value\n";
    char buf[64];
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        double X[3];
        g.coords(i, X);
        for (int a = 0; a < g.d; ++a) {
            std::snprintf(buf, sizeof(buf), "%.10g,", X[a]);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g\n", f.values[i]);
        os << buf;
    }
}

}  // namespace mhdlab

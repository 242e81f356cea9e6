#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "parahom/grid.hpp"

// PSHF layout: "PSHF", u32 version (1), u32 d, n, n_t, rank code, then the
// float64 payload, all little-endian, in index order t, x_d..x_1, component.

namespace parahom {
namespace {

constexpr char kMagic[4] = {'P', 'S', 'H', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    } else {
        return v;
    }
}

void put_u32(std::ostream& os, std::uint32_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw FieldFormatError("truncated header");
    return to_little(v);
}

}  // namespace

void write_field(const SpaceTimeField& f, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FieldFormatError("cannot open " + path.string() + " for writing");
    const Grid& g = f.grid();
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(g.d));
    put_u32(os, static_cast<std::uint32_t>(g.n));
    put_u32(os, static_cast<std::uint32_t>(g.n_t));
    put_u32(os, static_cast<std::uint32_t>(f.rank()));

    const std::size_t N = g.spatial_size();
    const int C = f.components();
    std::vector<double> buffer(N * static_cast<std::size_t>(C));
    for (int t = 0; t < g.n_t; ++t) {
        for (int c = 0; c < C; ++c) {
            const auto s = f.slice(t, c);
            for (std::size_t x = 0; x < N; ++x)
                buffer[x * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)] = to_little(s[x]);
        }
        os.write(reinterpret_cast<const char*>(buffer.data()),
                 static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    }
    if (!os) throw FieldFormatError("write failed for " + path.string());
}

SpaceTimeField read_field(const std::filesystem::path& path) {
    return read_field(path, Grid{});
}

SpaceTimeField read_field(const std::filesystem::path& path, const Grid& geometry) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FieldFormatError("cannot open " + path.string());
    char magic[4] = {};
    if (!is.read(magic, 4)) throw FieldFormatError("truncated header");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FieldFormatError("bad magic, not a PSHF file");
    const std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw FieldFormatError("unsupported PSHF version " + std::to_string(version));
    const auto d = static_cast<int>(get_u32(is));
    const auto n = static_cast<int>(get_u32(is));
    const auto n_t = static_cast<int>(get_u32(is));
    const std::uint32_t code = get_u32(is);
    if (d < 1 || d > 3 || n < 1 || n_t < 1 || code > 3) throw FieldFormatError("malformed header");

    Grid g = Grid::torus(d, n, n_t);
    if (geometry.d == d && geometry.n == n && geometry.n_t == n_t) g = geometry;
    SpaceTimeField f(g, static_cast<Rank>(code));
    const std::size_t N = g.spatial_size();
    const int C = f.components();
    std::vector<double> buffer(N * static_cast<std::size_t>(C));
    for (int t = 0; t < n_t; ++t) {
        if (!is.read(reinterpret_cast<char*>(buffer.data()),
                     static_cast<std::streamsize>(buffer.size() * sizeof(double))))
            throw FieldFormatError("truncated payload in " + path.string());
        for (int c = 0; c < C; ++c) {
            auto s = f.slice(t, c);
            for (std::size_t x = 0; x < N; ++x)
                s[x] = to_little(buffer[x * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)]);
        }
    }
    return f;
}

}  // namespace parahom

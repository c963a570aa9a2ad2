#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "flowscribe/flow/lut.hpp"

namespace flowscribe::flow {

namespace {

constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw std::runtime_error("LUT file is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".json";
    return p;
}

void save_lut(const FlowLUT& lut, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out.write("FLUT", 4);
        put<std::uint32_t>(out, kVersion);
        const Rect& e = lut.extent();
        for (double v : {e.x0, e.y0, e.x1, e.y1, lut.spacing(), lut.scan_length()}) put<double>(out, v);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(lut.generator().size()));
        out.write(lut.generator().data(), static_cast<std::streamsize>(lut.generator().size()));
        for (const auto& v : lut.velocities()) {
            put<double>(out, v.x);
            put<double>(out, v.y);
        }
        if (!out) throw std::runtime_error("failed writing " + path.string());
    }
    std::ofstream side(sidecar_path(path), std::ios::trunc);
    side << lut.header_json().dump(2) << '\n';
}

FlowLUT load_lut(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "FLUT", 4) != 0) throw std::runtime_error("not a FLUT file");
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion) throw std::runtime_error("unsupported LUT version " + std::to_string(version));
    Rect e;
    e.x0 = get<double>(in);
    e.y0 = get<double>(in);
    e.x1 = get<double>(in);
    e.y1 = get<double>(in);
    const double spacing = get<double>(in);
    const double scan = get<double>(in);
    const auto len = get<std::uint32_t>(in);
    if (len > 4096) throw std::runtime_error("LUT generator id is implausibly long");
    std::string gen(len, '\0');
    if (!in.read(gen.data(), len)) throw std::runtime_error("LUT file is truncated");
    if (!(spacing > 0) || !e.valid()) throw std::runtime_error("LUT header has an invalid grid");
    const std::size_t nx = FlowLUT::cells_for(e.width(), spacing) + 1;
    const std::size_t ny = FlowLUT::cells_for(e.height(), spacing) + 1;
    std::vector<Vec2> v(nx * ny);
    for (auto& q : v) {
        q.x = get<double>(in);
        q.y = get<double>(in);
    }
    nlohmann::json params = nlohmann::json::object();
    std::ifstream side(sidecar_path(path));
    if (side) {
        try {
            params = nlohmann::json::parse(side).value("params", nlohmann::json::object());
        } catch (const nlohmann::json::exception&) {
            // the sidecar is advisory; the binary header is authoritative
        }
    }
    return FlowLUT(e, spacing, scan, std::move(gen), std::move(params), std::move(v));
}

void write_quiver(const FlowLUT& lut, std::ostream& out, std::size_t stride) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    out << "# x y vx vy (" << lut.generator() << ", L=" << lut.scan_length() << ", spacing=" << lut.spacing() << ")\n";
    char line[128];
    for (std::size_t j = 0; j < lut.ny(); j += stride)
        for (std::size_t i = 0; i < lut.nx(); i += stride) {
            const Vec2 p = lut.node_position(i, j);
            const Vec2& v = lut.node(i, j);
            std::snprintf(line, sizeof line, "%.6g %.6g %.9g %.9g\n", p.x, p.y, v.x, v.y);
            out << line;
        }
}

}  // namespace flowscribe::flow

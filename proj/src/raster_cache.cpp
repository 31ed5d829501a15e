#include "settle/raster_cache.hpp"

#include "settle/error.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace settle {
namespace {

constexpr char kMagic[4] = {'S', 'B', 'R', '1'};

template <class T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.append(b, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
    if (pos + sizeof(T) > in.size()) throw FormatError(path.string() + ": truncated raster cache");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

long long mtime_of(const std::filesystem::path& path) {
    return static_cast<long long>(std::filesystem::last_write_time(path).time_since_epoch().count());
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

} // namespace

void write_binary_raster(const std::filesystem::path& path, const BinaryRaster& raster) {
    const auto words = raster.words();
    const auto raw_size = static_cast<uLong>(words.size() * sizeof(std::uint64_t));
    std::vector<Bytef> packed(compressBound(raw_size));
    uLongf packed_size = packed.size();
    if (compress2(packed.data(), &packed_size, reinterpret_cast<const Bytef*>(words.data()), raw_size, 6) != Z_OK)
        throw IoError("deflate failed for " + path.string());

    std::string out(kMagic, 4);
    const auto& s = raster.spec();
    put(out, s.resolution());
    put(out, s.lattice_col());
    put(out, s.lattice_row());
    put(out, s.width());
    put(out, s.height());
    put(out, static_cast<std::uint64_t>(packed_size));
    out.append(reinterpret_cast<const char*>(packed.data()), packed_size);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << out;
    if (!os) throw IoError("write failed: " + path.string());
}

BinaryRaster read_binary_raster(const std::filesystem::path& path) {
    const std::string in = slurp(path);
    if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0) throw FormatError(path.string() + ": not an SBR1 raster");
    std::size_t pos = 4;
    const auto res = take<double>(in, pos, path);
    const auto col = take<std::int64_t>(in, pos, path);
    const auto row = take<std::int64_t>(in, pos, path);
    const auto w = take<std::int64_t>(in, pos, path);
    const auto h = take<std::int64_t>(in, pos, path);
    const auto packed_size = take<std::uint64_t>(in, pos, path);
    if (pos + packed_size != in.size()) throw FormatError(path.string() + ": raster cache size mismatch");
    BinaryRaster raster(GridSpec(res, col, row, w, h));
    auto words = raster.words();
    uLongf raw_size = words.size() * sizeof(std::uint64_t);
    const uLongf expected = raw_size;
    if (uncompress(reinterpret_cast<Bytef*>(words.data()), &raw_size, reinterpret_cast<const Bytef*>(in.data() + pos),
                   static_cast<uLong>(packed_size)) != Z_OK ||
        raw_size != expected)
        throw FormatError(path.string() + ": corrupt raster cache");
    return raster;
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
    }
    return static_cast<std::uint32_t>(crc);
}

RasterCache::RasterCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path RasterCache::raster_path(const std::string& name) const { return dir_ / (name + ".sbr"); }
std::filesystem::path RasterCache::manifest_path(const std::string& name) const { return dir_ / (name + ".key"); }

std::optional<BinaryRaster> RasterCache::load(const std::string& name, const std::filesystem::path& input,
                                              const std::string& params) const {
    std::error_code ec;
    if (!std::filesystem::exists(manifest_path(name), ec) || !std::filesystem::exists(raster_path(name), ec))
        return std::nullopt;
    auto m = read_manifest(manifest_path(name));
    if (m["params"] != params || m["input"] != input.string()) return std::nullopt;
    const auto size = std::to_string(std::filesystem::file_size(input));
    if (m["size"] != size) return std::nullopt;
    if (m["mtime"] != std::to_string(mtime_of(input)) && m["crc32"] != std::to_string(file_crc32(input)))
        return std::nullopt;
    try {
        return read_binary_raster(raster_path(name));
    } catch (const FormatError&) {
        return std::nullopt;
    }
}

void RasterCache::store(const std::string& name, const std::filesystem::path& input, const std::string& params,
                        const BinaryRaster& raster) const {
    std::filesystem::create_directories(dir_);
    write_binary_raster(raster_path(name), raster);
    std::ofstream os(manifest_path(name), std::ios::trunc);
    if (!os) throw IoError("cannot write " + manifest_path(name).string());
    os << "params=" << params << "\ninput=" << input.string() << "\nsize=" << std::filesystem::file_size(input)
       << "\nmtime=" << mtime_of(input) << "\ncrc32=" << file_crc32(input) << '\n';
}

} // namespace settle

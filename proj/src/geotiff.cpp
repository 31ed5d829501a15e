#include "settle/geotiff.hpp"

#include "settle/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

namespace settle {
namespace {

static_assert(std::endian::native == std::endian::little, "GeoTIFF I/O assumes a little-endian host");

enum Tag : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kPlanarConfig = 284,
    kPredictor = 317,
    kTileWidth = 322,
    kTileLength = 323,
    kTileOffsets = 324,
    kTileByteCounts = 325,
    kSampleFormat = 339,
    kModelPixelScale = 33550,
    kModelTiepoint = 33922,
    kModelTransformation = 34264,
    kGeoKeyDirectory = 34735,
    kGeoDoubleParams = 34736,
    kGeoAsciiParams = 34737,
    kGdalNoData = 42113,
};

enum FieldType : std::uint16_t {
    kByte = 1, kAscii = 2, kShort = 3, kLong = 4, kRational = 5, kSByte = 6, kUndefined = 7,
    kSShort = 8, kSLong = 9, kSRational = 10, kFloat = 11, kDouble = 12,
};

std::size_t field_size(std::uint16_t type) {
    switch (type) {
    case kByte: case kAscii: case kSByte: case kUndefined: return 1;
    case kShort: case kSShort: return 2;
    case kLong: case kSLong: case kFloat: return 4;
    case kRational: case kSRational: case kDouble: return 8;
    default: return 0;
    }
}

std::size_t sample_bytes(SampleType t) {
    switch (t) {
    case SampleType::UInt8: return 1;
    case SampleType::Int16: return 2;
    case SampleType::Float32: return 4;
    }
    return 0;
}

template <class T>
T load(const unsigned char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

struct Field {
    std::uint16_t type = 0;
    std::vector<unsigned char> bytes;
    std::uint32_t count = 0;

    double number(std::size_t i) const {
        const unsigned char* p = bytes.data() + i * field_size(type);
        switch (type) {
        case kByte: case kUndefined: return *p;
        case kSByte: return static_cast<std::int8_t>(*p);
        case kShort: return load<std::uint16_t>(p);
        case kSShort: return load<std::int16_t>(p);
        case kLong: return load<std::uint32_t>(p);
        case kSLong: return load<std::int32_t>(p);
        case kFloat: return load<float>(p);
        case kDouble: return load<double>(p);
        case kRational: return static_cast<double>(load<std::uint32_t>(p)) / load<std::uint32_t>(p + 4);
        case kSRational: return static_cast<double>(load<std::int32_t>(p)) / load<std::int32_t>(p + 4);
        default: throw FormatError("unsupported TIFF field type " + std::to_string(type));
        }
    }
    std::vector<double> numbers() const {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = number(i);
        return out;
    }
    std::string text() const {
        std::string s(bytes.begin(), bytes.end());
        while (!s.empty() && s.back() == '\0') s.pop_back();
        return s;
    }
};

class FileReader {
public:
    explicit FileReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open " + path.string());
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::uint64_t>(in_.tellg());
    }
    void read(std::uint64_t offset, void* dst, std::size_t n) {
        if (offset + n > size_) throw FormatError(path_.string() + ": truncated TIFF (read past end of file)");
        in_.seekg(static_cast<std::streamoff>(offset));
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!in_) throw IoError("read failed: " + path_.string());
    }
    std::vector<unsigned char> bytes(std::uint64_t offset, std::size_t n) {
        std::vector<unsigned char> out(n);
        if (n) read(offset, out.data(), n);
        return out;
    }
    template <class T>
    T value(std::uint64_t offset) {
        T v;
        read(offset, &v, sizeof(T));
        return v;
    }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::uint64_t size_ = 0;
};

[[noreturn]] void format_error(const std::filesystem::path& path, const std::string& tag, const std::string& what) {
    throw FormatError(path.string() + ": " + tag + ": " + what);
}

std::vector<unsigned char> inflate_block(const std::vector<unsigned char>& src, std::size_t expected,
                                         const std::filesystem::path& path) {
    std::vector<unsigned char> out(expected);
    uLongf out_len = static_cast<uLongf>(expected);
    const int rc = uncompress(out.data(), &out_len, src.data(), static_cast<uLong>(src.size()));
    if (rc != Z_OK && rc != Z_BUF_ERROR) format_error(path, "compression", "corrupt deflate stream");
    if (out_len < expected) format_error(path, "compression", "deflate block shorter than expected");
    return out;
}

void undo_predictor(std::vector<unsigned char>& block, std::int64_t row_len, std::int64_t rows, SampleType type) {
    for (std::int64_t r = 0; r < rows; ++r) {
        if (type == SampleType::UInt8) {
            unsigned char* p = block.data() + r * row_len;
            for (std::int64_t i = 1; i < row_len; ++i) p[i] = static_cast<unsigned char>(p[i] + p[i - 1]);
        } else {
            unsigned char* p = block.data() + r * row_len * 2;
            for (std::int64_t i = 1; i < row_len; ++i) {
                const auto prev = load<std::uint16_t>(p + (i - 1) * 2);
                const auto cur = static_cast<std::uint16_t>(load<std::uint16_t>(p + i * 2) + prev);
                std::memcpy(p + i * 2, &cur, 2);
            }
        }
    }
}

double decode_sample(const unsigned char* p, SampleType type) {
    switch (type) {
    case SampleType::UInt8: return *p;
    case SampleType::Int16: return load<std::int16_t>(p);
    case SampleType::Float32: return load<float>(p);
    }
    return 0.0;
}

void encode_sample(unsigned char* p, double v, SampleType type) {
    switch (type) {
    case SampleType::UInt8: *p = static_cast<unsigned char>(v); break;
    case SampleType::Int16: {
        const auto s = static_cast<std::int16_t>(v);
        std::memcpy(p, &s, 2);
        break;
    }
    case SampleType::Float32: {
        const auto f = static_cast<float>(v);
        std::memcpy(p, &f, 4);
        break;
    }
    }
}

double parse_nodata(const std::string& text) {
    if (text == "nan" || text == "NaN" || text == "-nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        return std::stod(text);
    } catch (...) {
        throw FormatError("GDAL_NODATA: unparseable value '" + text + "'");
    }
}

std::string format_nodata(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

GeoTiffImage read_geotiff_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    FileReader file(path);
    unsigned char header[8];
    file.read(0, header, 8);
    if (header[0] == 'M' && header[1] == 'M') format_error(path, "byte-order", "big-endian TIFF is not supported");
    if (header[0] != 'I' || header[1] != 'I') format_error(path, "header", "not a TIFF file");
    const auto magic = load<std::uint16_t>(header + 2);
    if (magic == 43) format_error(path, "header", "BigTIFF is not supported");
    if (magic != 42) format_error(path, "header", "bad TIFF magic number");
    const std::uint32_t ifd = load<std::uint32_t>(header + 4);

    const auto entries = file.value<std::uint16_t>(ifd);
    std::map<std::uint16_t, Field> fields;
    for (std::uint16_t e = 0; e < entries; ++e) {
        unsigned char raw[12];
        file.read(ifd + 2 + 12ULL * e, raw, 12);
        Field f;
        const auto tag = load<std::uint16_t>(raw);
        f.type = load<std::uint16_t>(raw + 2);
        f.count = load<std::uint32_t>(raw + 4);
        const std::size_t size = field_size(f.type);
        if (size == 0) continue; // unknown field types are skipped, as TIFF readers must
        const std::size_t total = size * f.count;
        if (total <= 4)
            f.bytes.assign(raw + 8, raw + 8 + total);
        else
            f.bytes = file.bytes(load<std::uint32_t>(raw + 8), total);
        fields[tag] = std::move(f);
    }

    auto require = [&](std::uint16_t tag, const char* name) -> const Field& {
        auto it = fields.find(tag);
        if (it == fields.end() || it->second.count == 0) format_error(path, name, "required tag missing");
        return it->second;
    };
    auto scalar = [&](std::uint16_t tag, double fallback) {
        auto it = fields.find(tag);
        return it == fields.end() || it->second.count == 0 ? fallback : it->second.number(0);
    };

    GeoTiffImage image;
    image.width = static_cast<std::int64_t>(require(kImageWidth, "image-width").number(0));
    image.height = static_cast<std::int64_t>(require(kImageLength, "image-length").number(0));
    if (image.width <= 0 || image.height <= 0) format_error(path, "image-width", "empty image");

    if (scalar(kSamplesPerPixel, 1) != 1)
        format_error(path, "samples-per-pixel", "only single-band images are supported");
    const auto bits = static_cast<int>(scalar(kBitsPerSample, 1));
    const auto format = static_cast<int>(scalar(kSampleFormat, 1));
    if (bits == 8 && format == 1)
        image.type = SampleType::UInt8;
    else if (bits == 16 && format == 2)
        image.type = SampleType::Int16;
    else if (bits == 32 && format == 3)
        image.type = SampleType::Float32;
    else
        format_error(path, "sample-format",
                     "unsupported datatype (bits " + std::to_string(bits) + ", format " + std::to_string(format) + ")");

    const auto compression = static_cast<int>(scalar(kCompression, 1));
    if (compression != 1 && compression != 8 && compression != 32946)
        format_error(path, "compression", "unsupported compression scheme " + std::to_string(compression));
    const auto predictor = static_cast<int>(scalar(kPredictor, 1));
    if (predictor != 1 && !(predictor == 2 && image.type != SampleType::Float32))
        format_error(path, "predictor", "unsupported predictor " + std::to_string(predictor));
    if (fields.count(kModelTransformation))
        format_error(path, "model-transformation", "rotated/sheared georeferencing is not supported");

    // Georeferencing.
    const auto scale = require(kModelPixelScale, "model-pixel-scale").numbers();
    const auto tie = require(kModelTiepoint, "model-tiepoint").numbers();
    if (scale.size() < 2 || tie.size() < 6) format_error(path, "model-tiepoint", "too few values");
    image.pixel_x = scale[0];
    image.pixel_y = scale[1];
    if (!(image.pixel_x > 0) || !(image.pixel_y > 0)) format_error(path, "model-pixel-scale", "non-positive pixel size");
    image.origin_x = tie[3] - tie[0] * image.pixel_x;
    image.origin_y = tie[4] + tie[1] * image.pixel_y;

    int model_type = 2;
    int raster_type = 1;
    int projected_cs = 0;
    if (auto it = fields.find(kGeoKeyDirectory); it != fields.end()) {
        const auto keys = it->second.numbers();
        for (std::size_t k = 4; k + 3 < keys.size(); k += 4) {
            const auto id = static_cast<int>(keys[k]);
            const auto location = static_cast<int>(keys[k + 1]);
            const auto value = static_cast<int>(keys[k + 3]);
            if (location != 0) continue;
            if (id == 1024) model_type = value;
            if (id == 1025) raster_type = value;
            if (id == 3072) projected_cs = value;
        }
    }
    if (model_type == 1 && projected_cs == kMollweideCode)
        image.crs = CrsKind::Mollweide;
    else if (model_type == 2)
        image.crs = CrsKind::Geographic;
    else
        format_error(path, "geo-key-directory", "non-geographic CRS (model type " + std::to_string(model_type) +
                                                    ", projected CS " + std::to_string(projected_cs) + ")");
    if (raster_type == 2) {
        // PixelIsPoint: the tiepoint names the centre of the pixel.
        image.origin_x -= 0.5 * image.pixel_x;
        image.origin_y += 0.5 * image.pixel_y;
    }

    if (auto it = fields.find(kGdalNoData); it != fields.end()) image.nodata = parse_nodata(it->second.text());

    // Pixel data, strips or tiles.
    const std::size_t bps = sample_bytes(image.type);
    const bool tiled = fields.count(kTileOffsets) != 0;
    std::int64_t block_w, block_h;
    std::vector<double> offsets, counts;
    if (tiled) {
        block_w = static_cast<std::int64_t>(require(kTileWidth, "tile-width").number(0));
        block_h = static_cast<std::int64_t>(require(kTileLength, "tile-length").number(0));
        offsets = require(kTileOffsets, "tile-offsets").numbers();
        counts = require(kTileByteCounts, "tile-byte-counts").numbers();
    } else {
        block_w = image.width;
        block_h = std::min<std::int64_t>(static_cast<std::int64_t>(scalar(kRowsPerStrip, static_cast<double>(image.height))),
                                         image.height);
        offsets = require(kStripOffsets, "strip-offsets").numbers();
        counts = require(kStripByteCounts, "strip-byte-counts").numbers();
    }
    if (block_w <= 0 || block_h <= 0) format_error(path, tiled ? "tile-width" : "rows-per-strip", "invalid block size");
    const std::int64_t across = (image.width + block_w - 1) / block_w;
    const std::int64_t down = (image.height + block_h - 1) / block_h;
    if (static_cast<std::int64_t>(offsets.size()) < across * down || counts.size() < offsets.size())
        format_error(path, tiled ? "tile-offsets" : "strip-offsets", "fewer blocks than the image needs");

    image.values.assign(static_cast<std::size_t>(image.width * image.height), 0.0);
    for (std::int64_t by = 0; by < down; ++by) {
        for (std::int64_t bx = 0; bx < across; ++bx) {
            const std::size_t b = static_cast<std::size_t>(by * across + bx);
            const std::int64_t rows = tiled ? block_h : std::min(block_h, image.height - by * block_h);
            const std::size_t expected = static_cast<std::size_t>(block_w * rows) * bps;
            auto raw = file.bytes(static_cast<std::uint64_t>(offsets[b]), static_cast<std::size_t>(counts[b]));
            std::vector<unsigned char> block =
                compression == 1 ? std::move(raw) : inflate_block(raw, expected, path);
            if (block.size() < expected) format_error(path, "strip-byte-counts", "block shorter than expected");
            if (predictor == 2) undo_predictor(block, block_w, rows, image.type);
            for (std::int64_t r = 0; r < rows; ++r) {
                const std::int64_t y = by * block_h + r;
                if (y >= image.height) break;
                for (std::int64_t c = 0; c < block_w; ++c) {
                    const std::int64_t x = bx * block_w + c;
                    if (x >= image.width) break;
                    image.values[static_cast<std::size_t>(y * image.width + x)] =
                        decode_sample(block.data() + static_cast<std::size_t>(r * block_w + c) * bps, image.type);
                }
            }
        }
    }
    return image;
}

void write_geotiff_image(const std::filesystem::path& path, const GeoTiffImage& image,
                         const GeoTiffWriteOptions& options) {
    if (image.width <= 0 || image.height <= 0 ||
        image.values.size() != static_cast<std::size_t>(image.width * image.height))
        throw DomainError("GeoTIFF image dimensions do not match its values");
    if (options.tile_size != 0 && (options.tile_size < 16 || options.tile_size % 16 != 0))
        throw DomainError("tile size must be a positive multiple of 16");

    const SampleType type = options.type;
    const std::size_t bps = sample_bytes(type);
    const bool tiled = options.tile_size != 0;
    const std::int64_t block_w = tiled ? options.tile_size : image.width;
    const std::int64_t block_h =
        tiled ? options.tile_size
              : std::max<std::int64_t>(1, std::min<std::int64_t>(image.height, 8192 / std::max<std::int64_t>(1, image.width * static_cast<std::int64_t>(bps))));
    const std::int64_t across = (image.width + block_w - 1) / block_w;
    const std::int64_t down = (image.height + block_h - 1) / block_h;

    std::vector<unsigned char> out(8);
    out[0] = 'I';
    out[1] = 'I';
    out[2] = 42;

    std::vector<std::uint32_t> block_offsets, block_counts;
    for (std::int64_t by = 0; by < down; ++by) {
        for (std::int64_t bx = 0; bx < across; ++bx) {
            const std::int64_t rows = tiled ? block_h : std::min(block_h, image.height - by * block_h);
            std::vector<unsigned char> block(static_cast<std::size_t>(block_w * rows) * bps, 0);
            for (std::int64_t r = 0; r < rows; ++r) {
                const std::int64_t y = by * block_h + r;
                if (y >= image.height) break;
                for (std::int64_t c = 0; c < block_w; ++c) {
                    const std::int64_t x = bx * block_w + c;
                    if (x >= image.width) break;
                    encode_sample(block.data() + static_cast<std::size_t>(r * block_w + c) * bps,
                                  image.values[static_cast<std::size_t>(y * image.width + x)], type);
                }
            }
            if (options.compression == Compression::Deflate) {
                uLongf len = compressBound(static_cast<uLong>(block.size()));
                std::vector<unsigned char> packed(len);
                if (compress2(packed.data(), &len, block.data(), static_cast<uLong>(block.size()), 6) != Z_OK)
                    throw IoError("deflate failed while writing " + path.string());
                packed.resize(len);
                block = std::move(packed);
            }
            if (out.size() % 2) out.push_back(0);
            block_offsets.push_back(static_cast<std::uint32_t>(out.size()));
            block_counts.push_back(static_cast<std::uint32_t>(block.size()));
            out.insert(out.end(), block.begin(), block.end());
        }
    }

    struct Entry {
        std::uint16_t tag, type;
        std::uint32_t count;
        std::vector<unsigned char> data;
    };
    std::vector<Entry> entries;
    auto add_shorts = [&](std::uint16_t tag, std::vector<std::uint16_t> v) {
        Entry e{tag, kShort, static_cast<std::uint32_t>(v.size()), std::vector<unsigned char>(v.size() * 2)};
        std::memcpy(e.data.data(), v.data(), e.data.size());
        entries.push_back(std::move(e));
    };
    auto add_longs = [&](std::uint16_t tag, const std::vector<std::uint32_t>& v) {
        Entry e{tag, kLong, static_cast<std::uint32_t>(v.size()), std::vector<unsigned char>(v.size() * 4)};
        std::memcpy(e.data.data(), v.data(), e.data.size());
        entries.push_back(std::move(e));
    };
    auto add_doubles = [&](std::uint16_t tag, const std::vector<double>& v) {
        Entry e{tag, kDouble, static_cast<std::uint32_t>(v.size()), std::vector<unsigned char>(v.size() * 8)};
        std::memcpy(e.data.data(), v.data(), e.data.size());
        entries.push_back(std::move(e));
    };
    auto add_ascii = [&](std::uint16_t tag, const std::string& s) {
        Entry e{tag, kAscii, static_cast<std::uint32_t>(s.size() + 1), std::vector<unsigned char>(s.begin(), s.end())};
        e.data.push_back(0);
        entries.push_back(std::move(e));
    };

    add_longs(kImageWidth, {static_cast<std::uint32_t>(image.width)});
    add_longs(kImageLength, {static_cast<std::uint32_t>(image.height)});
    add_shorts(kBitsPerSample, {static_cast<std::uint16_t>(bps * 8)});
    add_shorts(kCompression, {static_cast<std::uint16_t>(options.compression == Compression::Deflate ? 8 : 1)});
    add_shorts(kPhotometric, {1});
    if (!tiled) add_longs(kStripOffsets, block_offsets);
    add_shorts(kSamplesPerPixel, {1});
    if (!tiled) {
        add_longs(kRowsPerStrip, {static_cast<std::uint32_t>(block_h)});
        add_longs(kStripByteCounts, block_counts);
    }
    add_shorts(kPlanarConfig, {1});
    if (tiled) {
        add_longs(kTileWidth, {static_cast<std::uint32_t>(block_w)});
        add_longs(kTileLength, {static_cast<std::uint32_t>(block_h)});
        add_longs(kTileOffsets, block_offsets);
        add_longs(kTileByteCounts, block_counts);
    }
    add_shorts(kSampleFormat, {static_cast<std::uint16_t>(type == SampleType::Float32 ? 3 : type == SampleType::Int16 ? 2 : 1)});
    add_doubles(kModelPixelScale, {image.pixel_x, image.pixel_y, 0.0});
    add_doubles(kModelTiepoint, {0.0, 0.0, 0.0, image.origin_x, image.origin_y, 0.0});
    if (image.crs == CrsKind::Geographic)
        add_shorts(kGeoKeyDirectory, {1, 1, 0, 3, 1024, 0, 1, 2, 1025, 0, 1, 1, 2048, 0, 1, 4326});
    else
        add_shorts(kGeoKeyDirectory, {1, 1, 0, 3, 1024, 0, 1, 1, 1025, 0, 1, 1, 3072, 0, 1, kMollweideCode});
    if (image.nodata) add_ascii(kGdalNoData, format_nodata(*image.nodata));
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.tag < b.tag; });

    if (out.size() % 2) out.push_back(0);
    const auto ifd_offset = static_cast<std::uint32_t>(out.size());
    std::memcpy(out.data() + 4, &ifd_offset, 4);
    std::size_t extra = ifd_offset + 2 + entries.size() * 12 + 4;
    std::vector<unsigned char> ifd;
    std::vector<unsigned char> tail;
    auto put16 = [&](std::uint16_t v) { ifd.insert(ifd.end(), reinterpret_cast<unsigned char*>(&v), reinterpret_cast<unsigned char*>(&v) + 2); };
    auto put32 = [&](std::uint32_t v) { ifd.insert(ifd.end(), reinterpret_cast<unsigned char*>(&v), reinterpret_cast<unsigned char*>(&v) + 4); };
    put16(static_cast<std::uint16_t>(entries.size()));
    for (const auto& e : entries) {
        put16(e.tag);
        put16(e.type);
        put32(e.count);
        if (e.data.size() <= 4) {
            unsigned char inline_value[4] = {0, 0, 0, 0};
            std::memcpy(inline_value, e.data.data(), e.data.size());
            ifd.insert(ifd.end(), inline_value, inline_value + 4);
        } else {
            put32(static_cast<std::uint32_t>(extra + tail.size()));
            tail.insert(tail.end(), e.data.begin(), e.data.end());
            if (tail.size() % 2) tail.push_back(0);
        }
    }
    put32(0);
    out.insert(out.end(), ifd.begin(), ifd.end());
    out.insert(out.end(), tail.begin(), tail.end());

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

GridSpec grid_of(const GeoTiffImage& image) {
    if (image.crs != CrsKind::Geographic)
        throw FormatError("geo-key-directory: raster is not in lon/lat; resample it onto the lattice first");
    if (std::abs(image.pixel_x - image.pixel_y) > 1e-12 * image.pixel_x)
        throw FormatError("model-pixel-scale: non-square pixels are not supported");
    return GridSpec::from_origin(image.origin_x, image.origin_y, image.pixel_x * kArcsecPerDegree, image.width,
                                 image.height);
}

NumericRaster read_geotiff(const std::filesystem::path& path) {
    const GeoTiffImage image = read_geotiff_image(path);
    GridSpec spec = [&] {
        try {
            return grid_of(image);
        } catch (const Error& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }();
    NumericRaster raster(spec);
    const bool has_nodata = image.nodata && !std::isnan(*image.nodata);
    for (std::size_t i = 0; i < image.values.size(); ++i) {
        const double v = image.values[i];
        raster.values[i] = has_nodata && v == *image.nodata ? kNoData : v;
    }
    return raster;
}

namespace {

std::uint8_t to_code(double v, std::optional<double> nodata, std::span<const std::uint8_t> allowed,
                     const std::filesystem::path& path) {
    if (is_nodata(v) || (nodata && v == *nodata)) return kNoDataCode;
    if (v < 0 || v > 254 || v != std::floor(v))
        throw FormatError(path.string() + ": category value " + std::to_string(v) + " is not a class code");
    const auto code = static_cast<std::uint8_t>(v);
    if (std::find(allowed.begin(), allowed.end(), code) == allowed.end())
        throw FormatError(path.string() + ": category code " + std::to_string(code) + " is not in the declared set");
    return code;
}

} // namespace

CategoricalRaster read_geotiff_categorical(const std::filesystem::path& path, std::span<const std::uint8_t> allowed) {
    const GeoTiffImage image = read_geotiff_image(path);
    GridSpec spec = [&] {
        try {
            return grid_of(image);
        } catch (const Error& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }();
    CategoricalRaster raster(spec);
    for (std::size_t i = 0; i < image.values.size(); ++i)
        raster.codes[i] = to_code(image.values[i], image.nodata, allowed, path);
    return raster;
}

void write_geotiff(const std::filesystem::path& path, const NumericRaster& raster, const GeoTiffWriteOptions& options,
                   std::optional<double> nodata) {
    GeoTiffImage image;
    image.width = raster.spec.width();
    image.height = raster.spec.height();
    image.origin_x = raster.spec.origin_lon();
    image.origin_y = raster.spec.origin_lat();
    image.pixel_x = image.pixel_y = raster.spec.resolution_degrees();
    image.values = raster.values;
    image.nodata = nodata;
    const bool any_missing = std::any_of(raster.values.begin(), raster.values.end(), is_nodata);
    if (any_missing) {
        if (!nodata && options.type != SampleType::Float32)
            throw DomainError("integer GeoTIFF with no-data cells needs an explicit no-data value");
        if (!nodata) image.nodata = std::numeric_limits<double>::quiet_NaN();
        for (auto& v : image.values)
            if (is_nodata(v)) v = *image.nodata;
    }
    write_geotiff_image(path, image, options);
}

void write_geotiff(const std::filesystem::path& path, const CategoricalRaster& raster, const GeoTiffWriteOptions& options) {
    GeoTiffImage image;
    image.width = raster.spec.width();
    image.height = raster.spec.height();
    image.origin_x = raster.spec.origin_lon();
    image.origin_y = raster.spec.origin_lat();
    image.pixel_x = image.pixel_y = raster.spec.resolution_degrees();
    image.values.assign(raster.codes.begin(), raster.codes.end());
    image.nodata = kNoDataCode;
    GeoTiffWriteOptions opts = options;
    opts.type = SampleType::UInt8;
    write_geotiff_image(path, image, opts);
}

ProjectedXY mollweide_forward(double lon, double lat) {
    const double lambda = lon * std::numbers::pi / 180.0;
    const double phi = lat * std::numbers::pi / 180.0;
    const double target = std::numbers::pi * std::sin(phi);
    // Solve 2t + sin(2t) = pi sin(phi) for t by Newton iteration on 2t.
    double t2 = phi * 2.0;
    if (std::abs(std::abs(phi) - std::numbers::pi / 2) < 1e-12) {
        t2 = std::copysign(std::numbers::pi, phi);
    } else {
        for (int i = 0; i < 50; ++i) {
            const double step = (t2 + std::sin(t2) - target) / (1.0 + std::cos(t2));
            t2 -= step;
            if (std::abs(step) < 1e-14) break;
        }
    }
    const double theta = t2 / 2.0;
    const double r = kMollweideRadiusM;
    return {r * 2.0 * std::numbers::sqrt2 / std::numbers::pi * lambda * std::cos(theta),
            r * std::numbers::sqrt2 * std::sin(theta)};
}

CategoricalRaster resample_mollweide(const GeoTiffImage& image, const GridSpec& target,
                                     std::span<const std::uint8_t> allowed) {
    if (image.crs != CrsKind::Mollweide) throw FormatError("geo-key-directory: image is not in Mollweide");
    CategoricalRaster out(target);
    for (std::int64_t r = 0; r < target.height(); ++r) {
        for (std::int64_t c = 0; c < target.width(); ++c) {
            const auto xy = mollweide_forward(target.center_lon(c), target.center_lat(r));
            const double fx = (xy.x - image.origin_x) / image.pixel_x;
            const double fy = (image.origin_y - xy.y) / image.pixel_y;
            if (fx < 0 || fy < 0 || fx >= image.width || fy >= image.height) continue;
            const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
            out.at(r, c) = to_code(image.values[static_cast<std::size_t>(iy * image.width + ix)], image.nodata,
                                   allowed, "mollweide image");
        }
    }
    return out;
}

} // namespace settle

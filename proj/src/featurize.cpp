#include "settle/featurize.hpp"

#include "settle/error.hpp"
#include "settle/zonal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <tuple>

namespace settle {
namespace {

constexpr char kMagic[4] = {'S', 'T', 'F', 'T'};
constexpr std::uint8_t kVersion = 1;

// Index of the feature cell holding the centre of grid cell (row, col), using
// lattice arithmetic in arc-seconds.
std::optional<std::size_t> feature_index(const GridSpec& layer, const GridSpec& grid, std::int64_t row,
                                         std::int64_t col) {
    const double x_arcsec = (static_cast<double>(grid.lattice_col() + col) + 0.5) * grid.resolution();
    const double y_arcsec = (static_cast<double>(grid.lattice_row() + row) + 0.5) * grid.resolution();
    const double fc = x_arcsec / layer.resolution() - static_cast<double>(layer.lattice_col());
    const double fr = y_arcsec / layer.resolution() - static_cast<double>(layer.lattice_row());
    if (fc < 0 || fr < 0) return std::nullopt;
    const auto c = static_cast<std::int64_t>(std::floor(fc));
    const auto r = static_cast<std::int64_t>(std::floor(fr));
    if (c >= layer.width() || r >= layer.height()) return std::nullopt;
    return static_cast<std::size_t>(r * layer.width() + c);
}

class ByteWriter {
public:
    template <class T>
    void put(T v) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        bytes.insert(bytes.end(), b, b + sizeof(T));
    }
    std::vector<unsigned char> bytes;
};

class ByteReader {
public:
    ByteReader(std::vector<unsigned char> data, std::filesystem::path path) : data_(std::move(data)), path_(std::move(path)) {}
    template <class T>
    T get() {
        if (pos_ + sizeof(T) > data_.size()) throw FormatError(path_.string() + ": truncated feature table");
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string text(std::size_t n) {
        if (pos_ + n > data_.size()) throw FormatError(path_.string() + ": truncated feature table");
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    std::vector<unsigned char> data_;
    std::filesystem::path path_;
    std::size_t pos_ = 0;
};

void sort_rows(FeatureTable& table) {
    std::sort(table.rows.begin(), table.rows.end(), [](const FeatureRow& a, const FeatureRow& b) {
        return std::tie(a.country, a.lattice_row, a.lattice_col) < std::tie(b.country, b.lattice_row, b.lattice_col);
    });
}

} // namespace

std::optional<SettlementClass> settlement_class_from_code(std::uint8_t code) {
    if (std::find(kSettlementCodes.begin(), kSettlementCodes.end(), code) == kSettlementCodes.end())
        return std::nullopt;
    return static_cast<SettlementClass>(code);
}

std::string_view class_name(SettlementClass cls) {
    switch (cls) {
    case SettlementClass::UrbanCentre: return "urban_centre";
    case SettlementClass::DenseUrbanCluster: return "dense_urban_cluster";
    case SettlementClass::SemiDenseUrbanCluster: return "semi_dense_urban_cluster";
    case SettlementClass::Suburban: return "suburban";
    case SettlementClass::RuralCluster: return "rural_cluster";
    case SettlementClass::LowDensityRural: return "low_density_rural";
    case SettlementClass::VeryLowDensityRural: return "very_low_density_rural";
    case SettlementClass::Water: return "water";
    }
    return "unknown";
}

SettlementClass effective_class(SettlementClass cls) {
    return cls == SettlementClass::Water ? SettlementClass::VeryLowDensityRural : cls;
}

bool is_high_density(SettlementClass cls) {
    switch (effective_class(cls)) {
    case SettlementClass::UrbanCentre:
    case SettlementClass::DenseUrbanCluster:
    case SettlementClass::SemiDenseUrbanCluster:
    case SettlementClass::Suburban:
    case SettlementClass::RuralCluster: return true;
    default: return false;
    }
}

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = [] {
        std::array<std::string, kFeatureCount> n{"rwi", "rwi_error", "nightlight"};
        for (std::size_t i = 0; i < kOneHotClasses.size(); ++i)
            n[kNumericFeatures + i] = std::string(class_name(kOneHotClasses[i]));
        return n;
    }();
    return names;
}

std::array<double, kFeatureCount> FeatureRow::features() const noexcept {
    std::array<double, kFeatureCount> f{};
    f[0] = rwi;
    f[1] = rwi_error;
    f[2] = nightlight;
    for (std::size_t i = 0; i < kOneHotClasses.size(); ++i)
        f[kNumericFeatures + i] = cls == kOneHotClasses[i] ? 1.0 : 0.0;
    return f;
}

std::vector<CellLabel> label_cells(const BinaryRaster& x, const BinaryRaster& y, const BinaryRaster& z) {
    require_same_spec(x.spec(), y.spec(), "label cells");
    require_same_spec(x.spec(), z.spec(), "label cells");
    std::vector<CellLabel> out;
    const auto wx = x.words(), wy = y.words(), wz = z.words();
    const std::int64_t width = x.width();
    for (std::size_t w = 0; w < wx.size(); ++w) {
        const std::uint64_t any = wx[w] | wy[w] | wz[w];
        const std::uint64_t all = wx[w] & wy[w] & wz[w];
        for (std::uint64_t bits = any; bits; bits &= bits - 1) {
            const int b = std::countr_zero(bits);
            const auto i = static_cast<std::int64_t>(w * 64 + static_cast<std::size_t>(b));
            out.push_back({i / width, i % width, static_cast<std::uint8_t>((all >> b) & 1u)});
        }
    }
    return out;
}

std::optional<double> sample_feature(const NumericRaster& layer, const GridSpec& grid, std::int64_t row,
                                     std::int64_t col) {
    const auto idx = feature_index(layer.spec, grid, row, col);
    if (!idx) return std::nullopt;
    const double v = layer.values[*idx];
    if (is_nodata(v)) return std::nullopt;
    return v;
}

std::optional<std::uint8_t> sample_feature(const CategoricalRaster& layer, const GridSpec& grid, std::int64_t row,
                                           std::int64_t col) {
    const auto idx = feature_index(layer.spec, grid, row, col);
    if (!idx) return std::nullopt;
    const std::uint8_t v = layer.codes[*idx];
    if (v == kNoDataCode) return std::nullopt;
    return v;
}

FeatureTable build_table(const BinaryRaster& x, const BinaryRaster& y, const BinaryRaster& z,
                         const FeatureLayers& layers, std::span<const AdminRegion> regions) {
    const GridSpec& spec = x.spec();
    const auto labels = label_cells(x, y, z);
    const auto region_of = region_labels(spec, regions);

    FeatureTable table;
    table.resolution_arcsec = spec.resolution();
    for (const auto& r : regions) table.countries.push_back(r.country_code);
    std::sort(table.countries.begin(), table.countries.end());
    table.countries.erase(std::unique(table.countries.begin(), table.countries.end()), table.countries.end());
    if (table.countries.size() > 0xFFFF) throw DomainError("too many countries for one feature table");
    std::map<std::string, std::uint16_t> country_index;
    for (std::size_t i = 0; i < table.countries.size(); ++i)
        country_index[table.countries[i]] = static_cast<std::uint16_t>(i);

    for (const auto& cell : labels) {
        const std::int32_t k = region_of[static_cast<std::size_t>(cell.row * spec.width() + cell.col)];
        if (k < 0) {
            ++table.dropped_outside_regions;
            continue;
        }
        const auto rwi = sample_feature(layers.rwi, spec, cell.row, cell.col);
        const auto rwi_error = sample_feature(layers.rwi_error, spec, cell.row, cell.col);
        const auto nightlight = sample_feature(layers.nightlight, spec, cell.row, cell.col);
        const double light = nightlight.value_or(-1.0);
        const auto code = sample_feature(layers.ghsl, spec, cell.row, cell.col);
        const auto cls = code ? settlement_class_from_code(*code) : std::nullopt;
        if (!rwi || !rwi_error || light < 0.0 || !cls) {
            ++table.dropped_missing;
            continue;
        }
        FeatureRow row;
        row.country = country_index.at(regions[static_cast<std::size_t>(k)].country_code);
        row.lattice_row = spec.lattice_row() + cell.row;
        row.lattice_col = spec.lattice_col() + cell.col;
        row.label = cell.label;
        row.rwi = *rwi;
        row.rwi_error = *rwi_error;
        row.nightlight = light;
        row.cls = effective_class(*cls);
        table.rows.push_back(row);
    }
    sort_rows(table);
    return table;
}

FeatureTable concat(std::span<const FeatureTable> tables) {
    FeatureTable out;
    if (tables.empty()) return out;
    out.resolution_arcsec = tables.front().resolution_arcsec;
    for (const auto& t : tables) {
        if (t.resolution_arcsec != out.resolution_arcsec)
            throw AlignmentError("feature tables were built at different resolutions");
        out.countries.insert(out.countries.end(), t.countries.begin(), t.countries.end());
        out.dropped_missing += t.dropped_missing;
        out.dropped_outside_regions += t.dropped_outside_regions;
    }
    std::sort(out.countries.begin(), out.countries.end());
    out.countries.erase(std::unique(out.countries.begin(), out.countries.end()), out.countries.end());
    std::map<std::string, std::uint16_t> index;
    for (std::size_t i = 0; i < out.countries.size(); ++i) index[out.countries[i]] = static_cast<std::uint16_t>(i);
    for (const auto& t : tables) {
        for (FeatureRow row : t.rows) {
            row.country = index.at(t.countries[row.country]);
            out.rows.push_back(row);
        }
    }
    sort_rows(out);
    return out;
}

double density_split_ratio(const FeatureTable& table) {
    std::int64_t high = 0, high_pos = 0, low = 0, low_pos = 0;
    for (const auto& row : table.rows) {
        if (is_high_density(row.cls)) {
            ++high;
            high_pos += row.label;
        } else {
            ++low;
            low_pos += row.label;
        }
    }
    if (high == 0 || low == 0) throw DomainError("density split needs both high- and low-density rows");
    if (low_pos == 0) throw DomainError("density split undefined: no agreement in low-density rows");
    // One rounding instead of three: (h+/h) / (l+/l) = (h+ * l) / (h * l+).
    return static_cast<double>(high_pos * low) / static_cast<double>(high * low_pos);
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
    ByteWriter w;
    for (const char c : kMagic) w.put(static_cast<std::uint8_t>(c));
    w.put(kVersion);
    w.put(std::uint8_t{0});
    w.put(std::uint16_t{0});
    w.put(table.resolution_arcsec);
    w.put(static_cast<std::uint32_t>(table.countries.size()));
    for (const auto& c : table.countries) {
        w.put(static_cast<std::uint16_t>(c.size()));
        w.bytes.insert(w.bytes.end(), c.begin(), c.end());
    }
    w.put(static_cast<std::uint64_t>(table.rows.size()));
    w.put(table.dropped_missing);
    w.put(table.dropped_outside_regions);
    for (const auto& r : table.rows) w.put(r.country);
    for (const auto& r : table.rows) w.put(r.lattice_row);
    for (const auto& r : table.rows) w.put(r.lattice_col);
    for (const auto& r : table.rows) w.put(r.label);
    for (const auto& r : table.rows) w.put(r.rwi);
    for (const auto& r : table.rows) w.put(r.rwi_error);
    for (const auto& r : table.rows) w.put(r.nightlight);
    for (const auto& r : table.rows) w.put(static_cast<std::uint8_t>(r.cls));
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os.write(reinterpret_cast<const char*>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ByteReader r(std::move(data), path);
    for (const char c : kMagic)
        if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(c)) throw FormatError(path.string() + ": not a feature table");
    if (const auto v = r.get<std::uint8_t>(); v != kVersion)
        throw FormatError(path.string() + ": unsupported feature table version " + std::to_string(v));
    r.get<std::uint8_t>();
    r.get<std::uint16_t>();
    FeatureTable table;
    table.resolution_arcsec = r.get<double>();
    const auto n_countries = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_countries; ++i) table.countries.push_back(r.text(r.get<std::uint16_t>()));
    const auto n = r.get<std::uint64_t>();
    table.dropped_missing = r.get<std::uint64_t>();
    table.dropped_outside_regions = r.get<std::uint64_t>();
    table.rows.resize(n);
    for (auto& row : table.rows) row.country = r.get<std::uint16_t>();
    for (auto& row : table.rows) row.lattice_row = r.get<std::int64_t>();
    for (auto& row : table.rows) row.lattice_col = r.get<std::int64_t>();
    for (auto& row : table.rows) row.label = r.get<std::uint8_t>();
    for (auto& row : table.rows) row.rwi = r.get<double>();
    for (auto& row : table.rows) row.rwi_error = r.get<double>();
    for (auto& row : table.rows) row.nightlight = r.get<double>();
    for (auto& row : table.rows) {
        const auto cls = settlement_class_from_code(r.get<std::uint8_t>());
        if (!cls) throw FormatError(path.string() + ": invalid settlement class code");
        row.cls = *cls;
    }
    if (!r.done()) throw FormatError(path.string() + ": trailing bytes after feature table");
    for (const auto& row : table.rows) {
        if (row.country >= table.countries.size()) throw FormatError(path.string() + ": country index out of range");
        if (row.label > 1) throw FormatError(path.string() + ": label is not 0/1");
    }
    return table;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << "country_code,lattice_row,lattice_col,label,rwi,rwi_error,nightlight,settlement_class";
    for (const auto cls : kOneHotClasses) os << ",is_" << class_name(cls);
    os << '\n';
    for (const auto& row : table.rows) {
        os << csv_field(table.country_of(row)) << ',' << row.lattice_row << ',' << row.lattice_col << ','
           << int{row.label} << ',' << exact_number(row.rwi) << ',' << exact_number(row.rwi_error) << ','
           << exact_number(row.nightlight) << ',' << class_name(row.cls);
        const auto f = row.features();
        for (std::size_t i = kNumericFeatures; i < kFeatureCount; ++i) os << ',' << static_cast<int>(f[i]);
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

} // namespace settle

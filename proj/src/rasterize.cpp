#include "settle/rasterize.hpp"

#include "settle/error.hpp"
#include "settle/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace settle {
namespace {

struct CellPoint {
    double u; // column coordinate
    double v; // row coordinate
};

// Coordinates within 1e-9 cells of a grid line are put exactly on it so that
// polygons drawn along cell edges do not leak into neighbours.
double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-9 ? r : x;
}

std::vector<CellPoint> to_cells(const Ring& ring, const GridSpec& spec) {
    std::vector<CellPoint> out;
    out.reserve(ring.size());
    for (const auto& p : ring) out.push_back({snap(spec.col_coord(p.lon)), snap(spec.row_coord(p.lat))});
    return out;
}

bool is_integer(double x) { return x == std::floor(x); }

class BoundaryMarker {
public:
    explicit BoundaryMarker(BinaryRaster& out) : out_(out), w_(out.width()), h_(out.height()) {}

    // Marks every cell whose open rectangle the closed segment a-b meets.
    void segment(CellPoint a, CellPoint b) {
        if (a.v == b.v) {
            if (is_integer(a.v)) return;
            span(static_cast<std::int64_t>(std::floor(a.v)), std::min(a.u, b.u), std::max(a.u, b.u));
            return;
        }
        const double vmin = std::min(a.v, b.v), vmax = std::max(a.v, b.v);
        const auto r_begin = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(vmin)));
        const auto r_end = std::min<std::int64_t>(h_ - 1, static_cast<std::int64_t>(std::ceil(vmax)) - 1);
        const double slope = (b.u - a.u) / (b.v - a.v);
        for (std::int64_t r = r_begin; r <= r_end; ++r) {
            const double lo = std::max(vmin, static_cast<double>(r));
            const double hi = std::min(vmax, static_cast<double>(r + 1));
            if (!(lo < hi)) continue;
            if (a.u == b.u) {
                span(r, a.u, a.u);
                continue;
            }
            const double ua = a.u + (lo - a.v) * slope;
            const double ub = a.u + (hi - a.v) * slope;
            span(r, std::min(ua, ub), std::max(ua, ub));
        }
    }

private:
    void span(std::int64_t row, double lo, double hi) {
        if (row < 0 || row >= h_) return;
        std::int64_t c0, c1;
        if (lo == hi) {
            if (is_integer(lo)) return;
            c0 = c1 = static_cast<std::int64_t>(std::floor(lo));
        } else {
            c0 = static_cast<std::int64_t>(std::floor(lo));
            c1 = static_cast<std::int64_t>(std::ceil(hi)) - 1;
        }
        c0 = std::max<std::int64_t>(c0, 0);
        c1 = std::min<std::int64_t>(c1, w_ - 1);
        for (std::int64_t c = c0; c <= c1; ++c) out_.set(row, c);
    }

    BinaryRaster& out_;
    std::int64_t w_, h_;
};

struct Edge {
    double v_top, v_bottom; // v_top < v_bottom
    double u_at_top;
    double slope;           // du/dv
};

// Even-odd scanline over cell-centre rows with an active edge list.
void scan_centers(const std::vector<std::vector<CellPoint>>& rings, BinaryRaster& out) {
    std::vector<Edge> edges;
    for (const auto& ring : rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            CellPoint a = ring[i], b = ring[i + 1];
            if (a.v == b.v) continue;
            if (a.v > b.v) std::swap(a, b);
            edges.push_back({a.v, b.v, a.u, (b.u - a.u) / (b.v - a.v)});
        }
    }
    if (edges.empty()) return;
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.v_top < y.v_top; });

    const double top = edges.front().v_top;
    double bottom = top;
    for (const auto& e : edges) bottom = std::max(bottom, e.v_bottom);
    const auto r_begin = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(top - 0.5)));
    const auto r_end = std::min<std::int64_t>(out.height() - 1, static_cast<std::int64_t>(std::floor(bottom - 0.5)));

    std::vector<const Edge*> active;
    std::vector<double> crossings;
    std::size_t next_edge = 0;
    for (std::int64_t r = r_begin; r <= r_end; ++r) {
        const double y = static_cast<double>(r) + 0.5;
        while (next_edge < edges.size() && edges[next_edge].v_top <= y) active.push_back(&edges[next_edge++]);
        std::erase_if(active, [y](const Edge* e) { return e->v_bottom <= y; });
        crossings.clear();
        for (const Edge* e : active) crossings.push_back(e->u_at_top + (y - e->v_top) * e->slope);
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
            auto c0 = static_cast<std::int64_t>(std::ceil(crossings[k] - 0.5));
            auto c1 = static_cast<std::int64_t>(std::floor(crossings[k + 1] - 0.5));
            c0 = std::max<std::int64_t>(c0, 0);
            c1 = std::min<std::int64_t>(c1, out.width() - 1);
            for (std::int64_t c = c0; c <= c1; ++c) out.set(r, c);
        }
    }
}

bool inside_grid(const MultiPolygon& shape, const GridSpec& spec) {
    const auto box = bounds(shape);
    if (!box) return true;
    return spec.col_coord(box->min_lon) >= -1e-9 && spec.col_coord(box->max_lon) <= spec.width() + 1e-9 &&
           spec.row_coord(box->max_lat) >= -1e-9 && spec.row_coord(box->min_lat) <= spec.height() + 1e-9;
}

} // namespace

RasterizeStats& RasterizeStats::operator+=(const RasterizeStats& o) noexcept {
    records += o.records;
    degenerate += o.degenerate;
    out_of_grid += o.out_of_grid;
    self_intersecting += o.self_intersecting;
    return *this;
}

Rasterizer::Rasterizer(const GridSpec& spec, RasterizeMode mode) : raster_(spec), mode_(mode) {
    if (spec.resolution() < 1.0) throw DomainError("rasterization needs a resolution of at least 1 arc-second");
}

void Rasterizer::add(const MultiPolygon& shape) {
    ++stats_.records;
    for (const auto& poly : shape) {
        if (std::any_of(poly.rings.begin(), poly.rings.end(), [](const Ring& r) { return self_intersects(r); })) {
            ++stats_.self_intersecting;
            break;
        }
    }
    if (mode_ == RasterizeMode::Centroid)
        add_centroid(shape);
    else
        add_coverage(shape);
}

void Rasterizer::add_centroid(const MultiPolygon& shape) {
    std::optional<LonLat> point = area_centroid(shape);
    if (!point) {
        ++stats_.degenerate;
        if (shape.empty() || shape.front().rings.empty() || shape.front().rings.front().empty()) return;
        point = shape.front().rings.front().front();
    }
    const GridSpec& spec = raster_.spec();
    const double u = snap(spec.col_coord(point->lon));
    const double v = snap(spec.row_coord(point->lat));
    const auto col = static_cast<std::int64_t>(std::floor(u));
    const auto row = static_cast<std::int64_t>(std::floor(v));
    if (col < 0 || row < 0 || col >= spec.width() || row >= spec.height()) {
        ++stats_.out_of_grid;
        return;
    }
    raster_.set(row, col);
}

void Rasterizer::add_coverage(const MultiPolygon& shape) {
    const GridSpec& spec = raster_.spec();
    if (!inside_grid(shape, spec)) ++stats_.out_of_grid;
    if (area(shape) == 0.0) ++stats_.degenerate;
    BoundaryMarker boundary(raster_);
    for (const auto& poly : shape) {
        std::vector<std::vector<CellPoint>> rings;
        for (const auto& ring : poly.rings) {
            rings.push_back(to_cells(ring, spec));
            const auto& pts = rings.back();
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) boundary.segment(pts[i], pts[i + 1]);
            if (pts.size() == 1) boundary.segment(pts[0], pts[0]);
        }
        scan_centers(rings, raster_);
    }
}

namespace {

template <class Record, class ShapeOf>
BinaryRaster rasterize_records(std::span<const Record> records, const GridSpec& spec, RasterizeMode mode,
                               RasterizeStats* stats, unsigned threads, ShapeOf shape_of) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(resolve_threads(threads), records.size()));
    std::vector<BinaryRaster> partial(workers, BinaryRaster(spec));
    std::vector<RasterizeStats> partial_stats(workers);
    parallel_for(workers, static_cast<unsigned>(workers), [&](std::size_t w) {
        Rasterizer r(spec, mode);
        const std::size_t begin = records.size() * w / workers, end = records.size() * (w + 1) / workers;
        for (std::size_t i = begin; i < end; ++i) r.add(shape_of(records[i]));
        partial_stats[w] = r.stats();
        partial[w] = std::move(r).take();
    });
    BinaryRaster out = std::move(partial.front());
    RasterizeStats total = partial_stats.front();
    for (std::size_t w = 1; w < workers; ++w) {
        out |= partial[w];
        total += partial_stats[w];
    }
    if (stats) *stats = total;
    return out;
}

} // namespace

BinaryRaster rasterize_footprints(std::span<const FootprintRecord> records, const GridSpec& spec,
                                  RasterizePolicy policy, RasterizeStats* stats, unsigned threads) {
    return rasterize_records(records, spec, policy.mode, stats, threads,
                             [](const FootprintRecord& r) -> const MultiPolygon& { return r.shape; });
}

BinaryRaster rasterize_extents(std::span<const ExtentRecord> records, const GridSpec& spec, RasterizeStats* stats,
                               unsigned threads) {
    return rasterize_records(records, spec, RasterizeMode::Coverage, stats, threads,
                             [](const ExtentRecord& r) -> const MultiPolygon& { return r.shape; });
}

void fill_centers(const MultiPolygon& shape, BinaryRaster& out) {
    for (const auto& poly : shape) {
        std::vector<std::vector<CellPoint>> rings;
        for (const auto& ring : poly.rings) rings.push_back(to_cells(ring, out.spec()));
        scan_centers(rings, out);
    }
}

} // namespace settle

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "mat/core.hpp"

namespace mat {

// M columns x N rows of equal cells covering the frame.
struct CellGrid {
  int m_cells = 16;
  int n_cells = 8;
  double frame_width = 1920.0;
  double frame_height = 1080.0;

  double cell_width() const { return frame_width / m_cells; }
  double cell_height() const { return frame_height / n_cells; }
  std::size_t cell_count() const { return static_cast<std::size_t>(m_cells) * n_cells; }

  void validate() const {
    if (m_cells < 1 || n_cells < 1) throw InvalidArgument("CellGrid: cell counts must be >= 1");
    if (!(frame_width > 0.0) || !(frame_height > 0.0)) {
      throw InvalidArgument("CellGrid: frame size must be positive");
    }
    if (cell_count() > std::numeric_limits<std::uint16_t>::max()) {
      throw InvalidArgument("CellGrid: too many cells for 16-bit integral counts");
    }
  }
};

// Inclusive cell ranges.
struct CellRect {
  int col1 = 0;
  int col2 = 0;
  int row1 = 0;
  int row2 = 0;

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

namespace detail {

// Smallest cell index whose extent [c*size, (c+1)*size) ends after `lo`.
inline int first_cell(double lo, double size, int count) {
  int c = std::clamp(static_cast<int>(std::floor(lo / size)), 0, count - 1);
  while (c > 0 && c * size > lo) --c;
  while (c < count - 1 && (c + 1) * size <= lo) ++c;
  return c;
}

// Largest cell index whose extent starts before `hi`.
inline int last_cell(double hi, double size, int count) {
  int c = std::clamp(static_cast<int>(std::ceil(hi / size)) - 1, 0, count - 1);
  while (c < count - 1 && (c + 1) * size < hi) ++c;
  while (c > 0 && c * size >= hi) --c;
  return c;
}

}  // namespace detail

// Cells whose rectangles meet `box` with positive area after clipping the box to
// the frame. Snapping is outward, so the cell cover always contains the box.
inline std::optional<CellRect> cell_span(const BoundingBox& box, const CellGrid& grid) {
  const double x1 = std::max(box.x1, 0.0);
  const double y1 = std::max(box.y1, 0.0);
  const double x2 = std::min(box.x2, grid.frame_width);
  const double y2 = std::min(box.y2, grid.frame_height);
  if (!(x2 > x1) || !(y2 > y1)) return std::nullopt;
  const double cw = grid.cell_width();
  const double ch = grid.cell_height();
  return CellRect{detail::first_cell(x1, cw, grid.m_cells), detail::last_cell(x2, cw, grid.m_cells),
                  detail::first_cell(y1, ch, grid.n_cells), detail::last_cell(y2, ch, grid.n_cells)};
}

// Scales a box about its center.
inline BoundingBox extend_box(const BoundingBox& box, double factor) {
  if (factor == 1.0) return box;
  const double hw = box.width() * factor / 2.0;
  const double hh = box.height() * factor / 2.0;
  const double cx = (box.x1 + box.x2) / 2.0;
  const double cy = (box.y1 + box.y2) / 2.0;
  return {cx - hw, cy - hh, cx + hw, cy + hh};
}

// K binary layers over the grid, stored cell-major: bit(k) of cell (col, row)
// lives at ((row * M) + col) * K + k.
class EncodingMaps {
 public:
  EncodingMaps(const CellGrid& grid, std::size_t layers)
      : m_(grid.m_cells), n_(grid.n_cells), k_(layers), bits_(grid.cell_count() * layers, 0) {}

  int m_cells() const { return m_; }
  int n_cells() const { return n_; }
  std::size_t layers() const { return k_; }

  std::uint8_t at(int col, int row, std::size_t layer) const { return bits_[index(col, row) + layer]; }
  void set(int col, int row, std::size_t layer) { bits_[index(col, row) + layer] = 1; }
  const std::uint8_t* cell(int col, int row) const { return &bits_[index(col, row)]; }

  std::size_t ones(std::size_t layer) const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < static_cast<std::size_t>(m_) * n_; ++c) n += bits_[c * k_ + layer];
    return n;
  }

  // Layers whose detection fell entirely outside the frame.
  const std::vector<std::size_t>& empty_layers() const { return empty_layers_; }
  void mark_empty(std::size_t layer) { empty_layers_.push_back(layer); }

 private:
  std::size_t index(int col, int row) const {
    return (static_cast<std::size_t>(row) * m_ + col) * k_;
  }

  int m_;
  int n_;
  std::size_t k_;
  std::vector<std::uint8_t> bits_;
  std::vector<std::size_t> empty_layers_;
};

inline EncodingMaps build_maps(std::span<const BoundingBox> detections, const CellGrid& grid,
                               double extension = 1.0) {
  grid.validate();
  EncodingMaps maps(grid, detections.size());
  for (std::size_t k = 0; k < detections.size(); ++k) {
    const auto span = cell_span(extend_box(detections[k], extension), grid);
    if (!span) {
      maps.mark_empty(k);
      continue;
    }
    for (int r = span->row1; r <= span->row2; ++r) {
      for (int c = span->col1; c <= span->col2; ++c) maps.set(c, r, k);
    }
  }
  return maps;
}

// Per-layer cumulative one-cell counts, same cell-major layout as the maps.
// Counts are kept modulo 2^bits of CountT; four-corner sums stay exact as long
// as the grid has fewer cells than that modulus.
template <class CountT>
class BasicIntegralImage3D {
 public:
  using Count = CountT;

  BasicIntegralImage3D(int m, int n, std::size_t k)
      : m_(m), n_(n), k_(k), data_(static_cast<std::size_t>(m) * n * k), zeros_(k, 0) {}

  int m_cells() const { return m_; }
  int n_cells() const { return n_; }
  std::size_t layers() const { return k_; }

  // Cumulative K-vector at (col, row); negative indices read as zero.
  const Count* cell(int col, int row) const {
    if (col < 0 || row < 0) return zeros_.data();
    return &data_[(static_cast<std::size_t>(row) * m_ + col) * k_];
  }
  Count* mutable_cell(int col, int row) { return &data_[(static_cast<std::size_t>(row) * m_ + col) * k_]; }

  Count at(int col, int row, std::size_t layer) const { return cell(col, row)[layer]; }

 private:
  int m_;
  int n_;
  std::size_t k_;
  std::vector<Count> data_;
  std::vector<Count> zeros_;
};

using IntegralImage3D = BasicIntegralImage3D<std::uint16_t>;

// Single raster pass of
//   I(m, n) = I(m, n-1) + I(m-1, n) - I(m-1, n-1) + f(m, n).
template <class Count = std::uint16_t>
BasicIntegralImage3D<Count> build_integral(const EncodingMaps& maps) {
  const int m = maps.m_cells();
  const int n = maps.n_cells();
  const std::size_t k = maps.layers();
  if (static_cast<std::size_t>(m) * n > std::numeric_limits<Count>::max()) {
    throw InvalidArgument("build_integral: grid has too many cells for the count type");
  }
  BasicIntegralImage3D<Count> out(m, n, k);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < m; ++col) {
      Count* dst = out.mutable_cell(col, row);
      const Count* left = out.cell(col - 1, row);
      const Count* up = out.cell(col, row - 1);
      const Count* diag = out.cell(col - 1, row - 1);
      const std::uint8_t* f = maps.cell(col, row);
      for (std::size_t l = 0; l < k; ++l) dst[l] = static_cast<Count>(left[l] + up[l] - diag[l] + f[l]);
    }
  }
  return out;
}

// Four-corner region sum over an inclusive cell rectangle, one value per layer.
template <class Count>
std::vector<Count> region_sum(const BasicIntegralImage3D<Count>& integral, const CellRect& r) {
  const std::size_t k = integral.layers();
  std::vector<Count> sum(k);
  const Count* a = integral.cell(r.col2, r.row2);
  const Count* b = integral.cell(r.col1 - 1, r.row1 - 1);
  const Count* c = integral.cell(r.col1 - 1, r.row2);
  const Count* d = integral.cell(r.col2, r.row1 - 1);
  for (std::size_t l = 0; l < k; ++l) sum[l] = static_cast<Count>(a[l] + b[l] - c[l] - d[l]);
  return sum;
}

namespace detail {

// Appends `base + j` for every set lane j of an 8- or 16-lane mask.
template <unsigned kLanes>
inline void append_lanes(std::vector<std::size_t>& found, std::size_t base, unsigned lane_mask) {
  const std::size_t n = found.size();
  found.resize(n + kLanes);
  std::size_t* out = found.data() + n;
  std::size_t m = 0;
  for (unsigned j = 0; j < kLanes; ++j) {
    out[m] = base + j;
    m += (lane_mask >> j) & 1u;
  }
  found.resize(n + m);
}

#if defined(__SSE2__)
// Bit j set where 16-bit lane j is nonzero.
inline unsigned nonzero_lanes16(__m128i v) {
  const unsigned bytes = ~static_cast<unsigned>(_mm_movemask_epi8(_mm_cmpeq_epi16(v, _mm_setzero_si128()))) & 0xFFFFu;
  unsigned lanes = 0;
  for (unsigned j = 0; j < 8; ++j) lanes |= ((bytes >> (2 * j)) & 1u) << j;
  return lanes;
}
#endif

}  // namespace detail

// Layers in [first, last) with at least one one-valued cell inside `rect`, in
// increasing order: the four-corner sum, then the nonzero entries.
template <class Count>
void query(const BasicIntegralImage3D<Count>& integral, const CellRect& rect, std::vector<std::size_t>& found,
           std::size_t first = 0, std::size_t last = std::numeric_limits<std::size_t>::max()) {
  found.clear();
  last = std::min(last, integral.layers());
  first = std::min(first, last);
  const Count* a = integral.cell(rect.col2, rect.row2);
  const Count* b = integral.cell(rect.col1 - 1, rect.row1 - 1);
  const Count* c = integral.cell(rect.col1 - 1, rect.row2);
  const Count* d = integral.cell(rect.col2, rect.row1 - 1);
  std::size_t l = first;
#if defined(__SSE2__)
  constexpr std::size_t kLanes = 16 / sizeof(Count);
  for (; l + kLanes <= last; l += kLanes) {
    const __m128i va = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + l));
    const __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + l));
    const __m128i vc = _mm_loadu_si128(reinterpret_cast<const __m128i*>(c + l));
    const __m128i vd = _mm_loadu_si128(reinterpret_cast<const __m128i*>(d + l));
    unsigned lanes = 0;
    if constexpr (sizeof(Count) == 1) {
      const __m128i sum = _mm_sub_epi8(_mm_add_epi8(va, vb), _mm_add_epi8(vc, vd));
      lanes = ~static_cast<unsigned>(_mm_movemask_epi8(_mm_cmpeq_epi8(sum, _mm_setzero_si128()))) & 0xFFFFu;
    } else {
      static_assert(sizeof(Count) == 2, "8- or 16-bit counts");
      lanes = detail::nonzero_lanes16(_mm_sub_epi16(_mm_add_epi16(va, vb), _mm_add_epi16(vc, vd)));
    }
    if (lanes != 0) detail::append_lanes<kLanes>(found, l, lanes);
  }
#endif
  for (; l < last; ++l) {
    if (static_cast<Count>(a[l] + b[l] - c[l] - d[l]) != 0) found.push_back(l);
  }
}

// Detections sharing at least one one-valued cell with the track's cell cover.
template <class Count>
std::vector<std::size_t> query(const BasicIntegralImage3D<Count>& integral, const BoundingBox& track_box,
                               const CellGrid& grid) {
  std::vector<std::size_t> found;
  if (const auto span = cell_span(track_box, grid)) query(integral, *span, found);
  return found;
}

struct CostEntry {
  std::size_t row = 0;  // track index
  std::size_t col = 0;  // detection index
  double cost = 0.0;    // 1 - IoU

  friend bool operator==(const CostEntry&, const CostEntry&) = default;
};

// Sparse track x detection cost matrix. Pairs without an entry are forbidden.
struct GatedCost {
  static constexpr double kForbidden = std::numeric_limits<double>::infinity();

  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<CostEntry> entries;  // sorted by (row, col)

  std::vector<double> dense() const {
    std::vector<double> m(rows * cols, kForbidden);
    for (const auto& e : entries) m[e.row * cols + e.col] = e.cost;
    return m;
  }

  double at(std::size_t row, std::size_t col) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{row, col},
                               [](const CostEntry& e, const std::pair<std::size_t, std::size_t>& key) {
                                 return std::pair{e.row, e.col} < key;
                               });
    if (it != entries.end() && it->row == row && it->col == col) return it->cost;
    return kForbidden;
  }

  friend bool operator==(const GatedCost&, const GatedCost&) = default;
};

// Positive overlap and IoU at or above the gate.
inline bool admissible_iou(double overlap, double gate) { return overlap > 0.0 && overlap >= gate; }

namespace detail {

template <class Count>
GatedCost gated_cost_impl(std::span<const BoundingBox> tracks, std::span<const BoundingBox> detections,
                          const CellGrid& grid, const TrackerConfig& config) {
  GatedCost out{tracks.size(), detections.size(), {}};

  // Layer order: by first covered row, then column (counting sort over cells).
  // A detection can only meet a track cover spanning rows [r1, r2] if its first
  // row lies in [r1 - tallest + 1, r2], which is a contiguous layer range.
  // Detections outside the frame go last; like tracks outside the frame, they
  // have no cells and are scored pairwise instead.
  const std::size_t cells = grid.cell_count();
  std::vector<std::size_t> key(detections.size());
  std::vector<std::size_t> bucket(cells + 2, 0);
  int tallest = 1;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    key[d] = cells;
    if (const auto span = cell_span(extend_box(detections[d], config.box_extension), grid)) {
      key[d] = static_cast<std::size_t>(span->row1) * grid.m_cells + span->col1;
      tallest = std::max(tallest, span->row2 - span->row1 + 1);
    }
    ++bucket[key[d] + 1];
  }
  for (std::size_t c = 1; c < bucket.size(); ++c) bucket[c] += bucket[c - 1];
  std::vector<std::size_t> order(detections.size());
  for (std::size_t d = 0; d < detections.size(); ++d) order[bucket[key[d]]++] = d;
  std::vector<int> sorted_rows(detections.size());
  std::vector<BoundingBox> sorted(detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted_rows[i] = static_cast<int>(key[order[i]] / grid.m_cells);
    sorted[i] = detections[order[i]];
  }

  const auto integral = build_integral<Count>(build_maps(sorted, grid, config.box_extension));
  const auto on_grid = static_cast<std::size_t>(
      std::lower_bound(sorted_rows.begin(), sorted_rows.end(), static_cast<int>(grid.n_cells)) - sorted_rows.begin());
  std::vector<std::size_t> found;
  found.reserve(detections.size());
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    found.clear();
    const auto span = cell_span(tracks[t], grid);
    if (span) {
      const auto lo = std::lower_bound(sorted_rows.begin(), sorted_rows.begin() + on_grid, span->row1 - tallest + 1);
      const auto hi = std::upper_bound(lo, sorted_rows.begin() + on_grid, span->row2);
      query(integral, *span, found, static_cast<std::size_t>(lo - sorted_rows.begin()),
            static_cast<std::size_t>(hi - sorted_rows.begin()));
    }
    for (std::size_t layer = span ? on_grid : 0; layer < sorted.size(); ++layer) found.push_back(layer);
    const std::size_t row_begin = out.entries.size();
    const BoundingBox& tb = tracks[t];
    const double track_area = tb.area();
    for (std::size_t layer : found) {
      // Same arithmetic as iou().
      const BoundingBox& db = sorted[layer];
      const double iw = std::max(0.0, std::min(tb.x2, db.x2) - std::max(tb.x1, db.x1));
      const double ih = std::max(0.0, std::min(tb.y2, db.y2) - std::max(tb.y1, db.y1));
      const double inter = iw * ih;
      const double uni = track_area + db.area() - inter;
      // Pairs clearly below the gate skip the division; the 0.1% margin dwarfs
      // rounding, so the kept set matches the fully connected filter exactly.
      if (!((inter > 0.0) & (inter >= 0.999 * config.iou_gate * uni))) continue;
      const double overlap = std::clamp(inter / uni, 0.0, 1.0);
      if (admissible_iou(overlap, config.iou_gate)) out.entries.push_back({t, order[layer], 1.0 - overlap});
    }
    std::sort(out.entries.begin() + static_cast<std::ptrdiff_t>(row_begin), out.entries.end(),
              [](const CostEntry& a, const CostEntry& b) { return a.col < b.col; });
  }
  return out;
}

}  // namespace detail

// Builds maps and the integral once, then scores each track only against its
// candidates. Layers are ordered by cell position so that a track's candidates
// sit in a few contiguous runs; costs are reported under the caller's indices.
inline GatedCost gated_cost(std::span<const BoundingBox> tracks, std::span<const BoundingBox> detections,
                            const CellGrid& grid, const TrackerConfig& config) {
  if (tracks.empty() || detections.empty()) return GatedCost{tracks.size(), detections.size(), {}};
  grid.validate();
  // 8-bit counts halve the memory traffic of each query and suffice below 256 cells.
  if (grid.cell_count() <= std::numeric_limits<std::uint8_t>::max()) {
    return detail::gated_cost_impl<std::uint8_t>(tracks, detections, grid, config);
  }
  return detail::gated_cost_impl<std::uint16_t>(tracks, detections, grid, config);
}

// Reference path: IoU on every pair, same gate.
inline GatedCost full_iou_cost(std::span<const BoundingBox> tracks, std::span<const BoundingBox> detections,
                               const TrackerConfig& config) {
  GatedCost out{tracks.size(), detections.size(), {}};
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double overlap = iou(tracks[t], detections[d]);
      if (admissible_iou(overlap, config.iou_gate)) out.entries.push_back({t, d, 1.0 - overlap});
    }
  }
  return out;
}

}  // namespace mat

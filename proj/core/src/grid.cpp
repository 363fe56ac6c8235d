#include "causalreach/grid.hpp"

#include <bit>
#include <cmath>

#include "causalreach/errors.hpp"

namespace causalreach {

std::size_t BitSet::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool BitSet::none() const {
  for (auto w : words_)
    if (w) return false;
  return true;
}

BitSet& BitSet::operator|=(const BitSet& o) {
  if (o.size_ != size_) throw ConfigError("bit set size mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  return *this;
}

BitSet& BitSet::operator&=(const BitSet& o) {
  if (o.size_ != size_) throw ConfigError("bit set size mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
  return *this;
}

BitSet& BitSet::subtract(const BitSet& o) {
  if (o.size_ != size_) throw ConfigError("bit set size mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  return *this;
}

bool BitSet::subset_of(const BitSet& o) const {
  if (o.size_ != size_) throw ConfigError("bit set size mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i] & ~o.words_[i]) return false;
  return true;
}

std::string_view to_string(GridSemantics s) {
  switch (s) {
    case GridSemantics::UnderJ: return "UnderJ";
    case GridSemantics::UnderI: return "UnderI";
    case GridSemantics::DerivedInterior: return "DerivedInterior";
    case GridSemantics::DerivedClosure: return "DerivedClosure";
    case GridSemantics::DerivedBoundary: return "DerivedBoundary";
    case GridSemantics::DerivedIntersection: return "DerivedIntersection";
    case GridSemantics::UnderOuterBall: return "UnderOuterBall";
  }
  return "?";
}

GridSemantics grid_semantics_from_string(std::string_view s) {
  for (auto g : {GridSemantics::UnderJ, GridSemantics::UnderI, GridSemantics::DerivedInterior,
                 GridSemantics::DerivedClosure, GridSemantics::DerivedBoundary,
                 GridSemantics::DerivedIntersection, GridSemantics::UnderOuterBall})
    if (to_string(g) == s) return g;
  throw ConfigError("unknown grid semantics '" + std::string(s) + "'");
}

ReachGrid::ReachGrid(Box box, std::vector<int> dims, GridSemantics semantics, GridMeta meta)
    : box_(std::move(box)), dims_(std::move(dims)), semantics_(semantics), meta_(std::move(meta)) {
  if (static_cast<int>(dims_.size()) != box_.dim()) throw ConfigError("grid dims mismatch box");
  std::size_t total = 1;
  cell_.resize(box_.dim());
  inv_cell_.resize(box_.dim());
  for (int i = 0; i < box_.dim(); ++i) {
    if (dims_[i] < 1) throw ConfigError("grid dims must be positive");
    total *= static_cast<std::size_t>(dims_[i]);
    cell_[i] = (box_.hi[i] - box_.lo[i]) / dims_[i];
    inv_cell_[i] = 1.0 / cell_[i];
  }
  cells_ = BitSet(total);
}

ReachGrid ReachGrid::cubic(const Box& box, int resolution, GridSemantics semantics,
                           GridMeta meta) {
  return ReachGrid(box, std::vector<int>(box.dim(), resolution), semantics, std::move(meta));
}

std::optional<std::size_t> ReachGrid::locate(const Vec& p) const {
  if (p.size() != box_.dim()) return std::nullopt;
  std::size_t idx = 0, stride = 1;
  for (int i = 0; i < box_.dim(); ++i) {
    const double x = p[i];
    if (!(x >= box_.lo[i] && x <= box_.hi[i])) return std::nullopt;
    int c = static_cast<int>((x - box_.lo[i]) * inv_cell_[i]);
    if (c >= dims_[i]) c = dims_[i] - 1;
    idx += static_cast<std::size_t>(c) * stride;
    stride *= static_cast<std::size_t>(dims_[i]);
  }
  return idx;
}

std::vector<int> ReachGrid::unravel(std::size_t index) const {
  std::vector<int> idx(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    idx[i] = static_cast<int>(index % static_cast<std::size_t>(dims_[i]));
    index /= static_cast<std::size_t>(dims_[i]);
  }
  return idx;
}

std::size_t ReachGrid::ravel(std::span<const int> idx) const {
  std::size_t index = 0, stride = 1;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    index += static_cast<std::size_t>(idx[i]) * stride;
    stride *= static_cast<std::size_t>(dims_[i]);
  }
  return index;
}

Vec ReachGrid::cell_center(std::size_t index) const {
  Vec c(box_.dim());
  for (int i = 0; i < box_.dim(); ++i) {
    const auto d = static_cast<std::size_t>(dims_[i]);
    c[i] = box_.lo[i] + (static_cast<double>(index % d) + 0.5) * cell_[i];
    index /= d;
  }
  return c;
}

Box ReachGrid::cell_box(std::size_t index) const {
  const Vec c = cell_center(index);
  return Box(c - 0.5 * cell_, c + 0.5 * cell_);
}

bool ReachGrid::mark_point(const Vec& p) {
  if (auto i = locate(p)) {
    cells_.set(*i);
    return true;
  }
  return false;
}

bool ReachGrid::contains_point(const Vec& p) const {
  auto i = locate(p);
  return i && cells_.test(*i);
}

bool ReachGrid::same_layout(const ReachGrid& o) const {
  return dims_ == o.dims_ && box_.lo == o.box_.lo && box_.hi == o.box_.hi;
}

void ReachGrid::merge(const ReachGrid& o) {
  if (!same_layout(o)) throw ConfigError("cannot merge grids with different layouts");
  cells_ |= o.cells_;
  meta_.truncated += o.meta_.truncated;
}

namespace {

// One separable pass of a 3-wide min (erode) or max (dilate) filter.
void filter_axis(std::vector<std::uint8_t>& buf, const std::vector<int>& dims, int axis,
                 bool erode) {
  std::size_t stride = 1;
  for (int i = 0; i < axis; ++i) stride *= static_cast<std::size_t>(dims[i]);
  const auto len = static_cast<std::size_t>(dims[axis]);
  const std::size_t block = stride * len;
  std::vector<std::uint8_t> line(len);
  for (std::size_t base = 0; base < buf.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      const std::size_t start = base + off;
      for (std::size_t j = 0; j < len; ++j) line[j] = buf[start + j * stride];
      for (std::size_t j = 0; j < len; ++j) {
        const std::uint8_t l = j > 0 ? line[j - 1] : 0;
        const std::uint8_t r = j + 1 < len ? line[j + 1] : 0;
        buf[start + j * stride] =
            erode ? static_cast<std::uint8_t>(l & line[j] & r) : static_cast<std::uint8_t>(l | line[j] | r);
      }
    }
  }
}

ReachGrid morph(const ReachGrid& g, bool erode, GridSemantics sem) {
  std::vector<std::uint8_t> buf(g.cell_count());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = g.marked(i) ? 1 : 0;
  for (int a = 0; a < g.dim(); ++a) filter_axis(buf, g.dims(), a, erode);
  ReachGrid out(g.box(), g.dims(), sem, g.meta());
  for (std::size_t i = 0; i < buf.size(); ++i)
    if (buf[i]) out.mark(i);
  return out;
}

}  // namespace

ReachGrid grid_interior(const ReachGrid& g) {
  return morph(g, true, GridSemantics::DerivedInterior);
}

ReachGrid grid_closure(const ReachGrid& g) {
  return morph(g, false, GridSemantics::DerivedClosure);
}

ReachGrid grid_boundary(const ReachGrid& g) {
  ReachGrid b = grid_closure(g);
  b.cells().subtract(grid_interior(g).cells());
  b.set_semantics(GridSemantics::DerivedBoundary);
  return b;
}

ReachGrid grid_intersection(const ReachGrid& a, const ReachGrid& b) {
  if (!a.same_layout(b)) throw ConfigError("cannot intersect grids with different layouts");
  ReachGrid out = a;
  out.cells() &= b.cells();
  out.set_semantics(GridSemantics::DerivedIntersection);
  return out;
}

ReachGrid grid_union(const ReachGrid& a, const ReachGrid& b) {
  ReachGrid out = a;
  out.merge(b);
  return out;
}

bool grid_subset(const ReachGrid& a, const ReachGrid& b) {
  if (!a.same_layout(b)) throw ConfigError("cannot compare grids with different layouts");
  return a.cells().subset_of(b.cells());
}

std::size_t cells_outside(const ReachGrid& a, const ReachGrid& b, int tolerance) {
  ReachGrid bb = b;
  for (int i = 0; i < tolerance; ++i) bb = grid_closure(bb);
  BitSet diff = a.cells();
  diff.subtract(bb.cells());
  return diff.count();
}

}  // namespace causalreach

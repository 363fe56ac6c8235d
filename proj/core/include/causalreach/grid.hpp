#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalreach/curves.hpp"
#include "causalreach/linalg.hpp"

namespace causalreach {

class BitSet {
 public:
  BitSet() = default;
  explicit BitSet(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  std::size_t count() const;
  bool none() const;

  BitSet& operator|=(const BitSet& o);
  BitSet& operator&=(const BitSet& o);
  /// Clears every bit that is set in o.
  BitSet& subtract(const BitSet& o);
  bool subset_of(const BitSet& o) const;
  bool operator==(const BitSet& o) const = default;

  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

enum class GridSemantics {
  UnderJ,
  UnderI,
  DerivedInterior,
  DerivedClosure,
  DerivedBoundary,
  DerivedIntersection,
  UnderOuterBall,
};

std::string_view to_string(GridSemantics s);
GridSemantics grid_semantics_from_string(std::string_view s);

struct GridMeta {
  Vec source;
  Direction direction = Direction::Future;
  std::string config_digest;
  std::string manifold;
  std::uint64_t samples = 0;
  /// Trajectories cut short by the domain (or the covering copies).
  std::uint64_t truncated = 0;
};

/// Occupancy grid over a box. Cell i along an axis covers
/// [lo + i h, lo + (i+1) h); the top face belongs to the last cell.
class ReachGrid {
 public:
  ReachGrid() = default;
  ReachGrid(Box box, std::vector<int> dims, GridSemantics semantics, GridMeta meta = {});
  static ReachGrid cubic(const Box& box, int resolution, GridSemantics semantics,
                         GridMeta meta = {});

  const Box& box() const { return box_; }
  const std::vector<int>& dims() const { return dims_; }
  int dim() const { return static_cast<int>(dims_.size()); }
  std::size_t cell_count() const { return cells_.size(); }
  GridSemantics semantics() const { return semantics_; }
  const GridMeta& meta() const { return meta_; }
  GridMeta& meta() { return meta_; }
  void set_semantics(GridSemantics s) { semantics_ = s; }
  const BitSet& cells() const { return cells_; }
  BitSet& cells() { return cells_; }

  Vec cell_size() const { return cell_; }
  double cell_diagonal() const { return cell_.norm(); }
  std::optional<std::size_t> locate(const Vec& p) const;
  std::vector<int> unravel(std::size_t index) const;
  std::size_t ravel(std::span<const int> idx) const;
  Vec cell_center(std::size_t index) const;
  Box cell_box(std::size_t index) const;

  bool marked(std::size_t index) const { return cells_.test(index); }
  void mark(std::size_t index) { cells_.set(index); }
  bool mark_point(const Vec& p);
  /// Whether p's cell is marked; false outside the box.
  bool contains_point(const Vec& p) const;
  std::size_t count() const { return cells_.count(); }
  bool same_layout(const ReachGrid& o) const;

  void merge(const ReachGrid& o);

 private:
  Box box_;
  std::vector<int> dims_;
  Vec cell_, inv_cell_;
  BitSet cells_;
  GridSemantics semantics_ = GridSemantics::UnderJ;
  GridMeta meta_;
};

/// Erosion by the 3^n cube; cells outside the grid count as unmarked.
ReachGrid grid_interior(const ReachGrid& g);
/// Dilation by the 3^n cube.
ReachGrid grid_closure(const ReachGrid& g);
/// closure minus interior.
ReachGrid grid_boundary(const ReachGrid& g);
ReachGrid grid_intersection(const ReachGrid& a, const ReachGrid& b);
ReachGrid grid_union(const ReachGrid& a, const ReachGrid& b);
/// Every marked cell of a is marked in b.
bool grid_subset(const ReachGrid& a, const ReachGrid& b);
/// a \ b after dilating b by `tolerance` cells.
std::size_t cells_outside(const ReachGrid& a, const ReachGrid& b, int tolerance);

}  // namespace causalreach

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "causalreach/linalg.hpp"

namespace causalreach {

enum class Character { Spacelike, Null, Timelike };
enum class Orientation { Future, Past, Unoriented };

struct CausalCharacter {
  Character character = Character::Spacelike;
  Orientation orientation = Orientation::Unoriented;

  bool operator==(const CausalCharacter&) const = default;
  bool causal() const { return character != Character::Spacelike; }
};

std::string_view to_string(Character c);
std::string_view to_string(Orientation o);

using MatrixField = std::function<Mat(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using PointPredicate = std::function<bool(const Vec&)>;
/// Optional closed form for [X_i, X_j](p); returning nullopt falls back to
/// finite differences.
using BracketOverride = std::function<std::optional<Vec>(int i, int j, const Vec& p)>;

struct SubSpaceTimeFields {
  std::string name;
  int dim = 0;
  int rank = 0;
  MatrixField frame;             // n x k, column j is X_j(p)
  MatrixField metric;            // k x k, g_ij(p)
  VectorField time_orientation;  // c(p) in R^k
  Box domain;
  PointPredicate excluded;       // optional removed region (e.g. deleted orbit lines)
  BracketOverride analytic_bracket;
  bool constant_metric = false;  // g and c independent of p: orthonormal transform is cached
};

/// A bracket-generating distribution with an index-1 metric and a time
/// orientation, restricted to a domain box. Immutable after construction.
class SubSpaceTime {
 public:
  explicit SubSpaceTime(SubSpaceTimeFields fields);

  const std::string& name() const { return f_.name; }
  int dim() const { return f_.dim; }
  int rank() const { return f_.rank; }
  const Box& domain() const { return f_.domain; }
  const SubSpaceTimeFields& fields() const { return f_; }

  Mat frame(const Vec& p) const { return f_.frame(p); }
  Mat metric(const Vec& p) const { return f_.metric(p); }
  Vec time_orientation(const Vec& p) const { return f_.time_orientation(p); }
  bool excluded(const Vec& p) const { return f_.excluded && f_.excluded(p); }
  bool has_exclusions() const { return static_cast<bool>(f_.excluded); }
  /// Inside the domain box and not in a removed region.
  bool admissible(const Vec& p) const { return f_.domain.contains(p) && !excluded(p); }
  bool constant_metric() const { return f_.constant_metric; }
  const BracketOverride& analytic_bracket() const { return f_.analytic_bracket; }

  /// A(p): orthonormal-frame coefficients -> raw frame coefficients.
  Mat orthonormal_transform(const Vec& p) const;
  /// Ambient velocity F(p) A(p) u for orthonormal coefficients u.
  Vec velocity(const Vec& p, const Vec& u_orth) const;
  /// Ambient vector F(p) u for raw frame coefficients u.
  Vec to_ambient(const Vec& p, const Vec& u_raw) const { return f_.frame(p) * u_raw; }

  /// Same structure on a different domain box.
  SubSpaceTime with_domain(const Box& domain) const;

 private:
  SubSpaceTimeFields f_;
  std::optional<Mat> cached_transform_;
};

struct OrthonormalFrame {
  Vec base_point;
  Mat transform;
};

/// Tolerance band for the null cone, relative to the Euclidean norm of the
/// ambient vector.
inline constexpr double kNullBand = 1e-9;
inline constexpr double kDegenerateDet = 1e-12;

CausalCharacter classify_vector(const SubSpaceTime& st, const Vec& p, const Vec& u);
/// Classification from raw metric data; used where the frame is already known.
CausalCharacter classify_coefficients(const Mat& g, const Vec& c, const Vec& u, double scale_sq);

/// Signature-aware Gram-Schmidt seeded with c. Throws DegenerateMetricError.
Mat orthonormal_transform(const Mat& g, const Vec& c);
OrthonormalFrame orthonormal_frame(const SubSpaceTime& st, const Vec& p);

/// Number of negative eigenvalues of a symmetric matrix; throws on |det| < 1e-12.
int metric_index(const Mat& g);

/// Nested bracket expression X_I built from frame indices.
class BracketExpr {
 public:
  static constexpr int kMaxDepth = 3;

  static BracketExpr field(int index);
  static BracketExpr bracket(const BracketExpr& a, const BracketExpr& b);

  bool is_field() const { return index_ >= 0; }
  int index() const { return index_; }
  const BracketExpr& left() const { return *left_; }
  const BracketExpr& right() const { return *right_; }
  int depth() const { return depth_; }
  std::string to_string() const;

 private:
  int index_ = -1;
  int depth_ = 0;
  std::shared_ptr<const BracketExpr> left_, right_;
};

/// h_fd = 1e-5 (1 + |p|) for frame fields; bracket-valued fields are
/// differentiated with wider steps so truncation and round-off stay balanced.
double fd_step(const Vec& p, int field_depth);

Vec evaluate_field(const SubSpaceTime& st, const BracketExpr& e, const Vec& p);
Vec lie_bracket(const SubSpaceTime& st, const BracketExpr& a, const BracketExpr& b, const Vec& p);
Vec lie_bracket(const SubSpaceTime& st, int i, int j, const Vec& p);

/// True iff the frame and its first brackets span R^n at p.
bool two_step_check(const SubSpaceTime& st, const Vec& p);

/// Lorentzian extension g + lambda^2 h on the h-orthogonal complement of D.
class ExtendedMetric {
 public:
  ExtendedMetric(SubSpaceTime base, double lambda, MatrixField aux = {});

  const SubSpaceTime& base() const { return base_; }
  double lambda() const { return lambda_; }
  Mat aux(const Vec& p) const;
  /// Full n x n metric at p.
  Mat at(const Vec& p) const;

 private:
  SubSpaceTime base_;
  double lambda_;
  MatrixField aux_;
};

ExtendedMetric extend_metric(const SubSpaceTime& st, double lambda);

}  // namespace causalreach

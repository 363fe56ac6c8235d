#include "causalreach/geometry.hpp"

#include <cmath>

#include "causalreach/errors.hpp"

namespace causalreach {

std::string_view to_string(Character c) {
  switch (c) {
    case Character::Spacelike: return "spacelike";
    case Character::Null: return "null";
    case Character::Timelike: return "timelike";
  }
  return "?";
}

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::Future: return "future";
    case Orientation::Past: return "past";
    case Orientation::Unoriented: return "unoriented";
  }
  return "?";
}

SubSpaceTime::SubSpaceTime(SubSpaceTimeFields fields) : f_(std::move(fields)) {
  const int n = f_.dim, k = f_.rank;
  if (n < 2 || n > kMaxDim) throw ConfigError("dimension must lie in [2, 6]");
  if (k < 2 || k > n) throw ConfigError("rank must satisfy 2 <= k <= n");
  if (!f_.frame || !f_.metric || !f_.time_orientation)
    throw ConfigError("frame, metric and time orientation are required");
  if (f_.domain.dim() != n) throw ConfigError("domain box dimension mismatch");

  const Vec c0 = f_.domain.center();
  const Mat F = f_.frame(c0);
  const Mat g = f_.metric(c0);
  const Vec c = f_.time_orientation(c0);
  if (F.rows() != n || F.cols() != k) throw ConfigError("frame evaluator must return n x k");
  if (g.rows() != k || g.cols() != k) throw ConfigError("metric evaluator must return k x k");
  if (c.size() != k) throw ConfigError("time orientation must have k coefficients");
  if (Eigen::FullPivLU<Mat>(F).rank() != k) throw ConfigError("frame vectors are dependent");
  const Mat A = causalreach::orthonormal_transform(g, c);
  if (f_.constant_metric) cached_transform_ = A;
}

Mat SubSpaceTime::orthonormal_transform(const Vec& p) const {
  if (cached_transform_) return *cached_transform_;
  return causalreach::orthonormal_transform(f_.metric(p), f_.time_orientation(p));
}

Vec SubSpaceTime::velocity(const Vec& p, const Vec& u_orth) const {
  if (cached_transform_) return f_.frame(p) * (*cached_transform_ * u_orth);
  return f_.frame(p) * (orthonormal_transform(p) * u_orth);
}

SubSpaceTime SubSpaceTime::with_domain(const Box& domain) const {
  SubSpaceTimeFields f = f_;
  f.domain = domain;
  return SubSpaceTime(std::move(f));
}

int metric_index(const Mat& g) {
  if (std::abs(g.determinant()) < kDegenerateDet)
    throw DegenerateMetricError("metric is degenerate (|det| < 1e-12)");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
  int neg = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < 0) ++neg;
  return neg;
}

Mat orthonormal_transform(const Mat& g, const Vec& c) {
  const int k = static_cast<int>(g.rows());
  if (std::abs(g.determinant()) < kDegenerateDet)
    throw DegenerateMetricError("metric is degenerate (|det| < 1e-12)");
  // With c timelike, the g-complement of c is spacelike exactly when g has
  // index 1, so the frame below completes only in that case.
  const double cc = c.dot(g * c);
  if (!(cc < 0)) throw DegenerateMetricError("time orientation is not timelike");

  Mat A(k, k);
  A.col(0) = c / std::sqrt(-cc);
  const double tol = 1e-10 * std::max(1.0, g.norm());
  int filled = 1;
  for (int e = 0; e < k && filled < k; ++e) {
    Vec v = Vec::Unit(k, e);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < filled; ++j) {
        const double sign = j == 0 ? -1.0 : 1.0;  // g(a_j, a_j)
        v -= sign * v.dot(g * A.col(j)) * A.col(j);
      }
    }
    const double n2 = v.dot(g * v);
    if (n2 > tol) A.col(filled++) = v / std::sqrt(n2);
  }
  if (filled != k) throw DegenerateMetricError("metric is not of index 1");
  return A;
}

OrthonormalFrame orthonormal_frame(const SubSpaceTime& st, const Vec& p) {
  if (!st.domain().contains(p)) throw DomainError("point outside domain: " + format_point(p));
  return {p, orthonormal_transform(st.metric(p), st.time_orientation(p))};
}

CausalCharacter classify_coefficients(const Mat& g, const Vec& c, const Vec& u, double scale_sq) {
  if (u.squaredNorm() == 0.0) return {Character::Spacelike, Orientation::Unoriented};
  const double q = u.dot(g * u);
  const double band = kNullBand * scale_sq;
  if (q > band) return {Character::Spacelike, Orientation::Unoriented};
  const Character ch = std::abs(q) <= band ? Character::Null : Character::Timelike;
  const double o = u.dot(g * c);
  return {ch, o < 0 ? Orientation::Future : Orientation::Past};
}

CausalCharacter classify_vector(const SubSpaceTime& st, const Vec& p, const Vec& u) {
  if (!st.domain().contains(p)) throw DomainError("point outside domain: " + format_point(p));
  if (u.size() != st.rank()) throw ConfigError("vector must have k frame coefficients");
  const Mat g = st.metric(p);
  if (std::abs(g.determinant()) < kDegenerateDet)
    throw DegenerateMetricError("metric is degenerate at " + format_point(p));
  const Vec v = st.frame(p) * u;
  return classify_coefficients(g, st.time_orientation(p), u, v.squaredNorm());
}

// ---------------------------------------------------------------------------
// Brackets

BracketExpr BracketExpr::field(int index) {
  if (index < 0) throw ConfigError("frame index must be nonnegative");
  BracketExpr e;
  e.index_ = index;
  return e;
}

BracketExpr BracketExpr::bracket(const BracketExpr& a, const BracketExpr& b) {
  BracketExpr e;
  e.depth_ = 1 + std::max(a.depth_, b.depth_);
  if (e.depth_ > kMaxDepth) throw ConfigError("bracket nesting deeper than 3");
  e.left_ = std::make_shared<const BracketExpr>(a);
  e.right_ = std::make_shared<const BracketExpr>(b);
  return e;
}

std::string BracketExpr::to_string() const {
  if (is_field()) return "X" + std::to_string(index_);
  return "[" + left_->to_string() + "," + right_->to_string() + "]";
}

double fd_step(const Vec& p, int field_depth) {
  static constexpr double kSteps[] = {1e-5, 1e-3, 1e-2};
  const int d = std::min(field_depth, 2);
  return kSteps[d] * (1.0 + p.norm());
}

namespace {

std::optional<Vec> analytic(const SubSpaceTime& st, const BracketExpr& a, const BracketExpr& b,
                            const Vec& p) {
  if (!st.analytic_bracket() || !a.is_field() || !b.is_field()) return std::nullopt;
  return st.analytic_bracket()(a.index(), b.index(), p);
}

Vec eval(const SubSpaceTime& st, const BracketExpr& e, const Vec& p);

Mat jacobian(const SubSpaceTime& st, const BracketExpr& e, const Vec& p) {
  const int n = st.dim();
  const double h = fd_step(p, e.depth());
  Mat J(n, n);
  for (int m = 0; m < n; ++m) {
    Vec dp = Vec::Zero(n);
    dp[m] = h;
    J.col(m) = (eval(st, e, p + dp) - eval(st, e, p - dp)) / (2 * h);
  }
  return J;
}

Vec eval(const SubSpaceTime& st, const BracketExpr& e, const Vec& p) {
  if (e.is_field()) return st.frame(p).col(e.index());
  if (auto v = analytic(st, e.left(), e.right(), p)) return *v;
  return jacobian(st, e.right(), p) * eval(st, e.left(), p) -
         jacobian(st, e.left(), p) * eval(st, e.right(), p);
}

// Largest coordinate offset the stencil of e visits around p.
double stencil_reach(const SubSpaceTime& st, const BracketExpr& e, const Vec& p) {
  if (e.is_field()) return 0.0;
  if (st.analytic_bracket() && e.left().is_field() && e.right().is_field()) return 0.0;
  const double l = fd_step(p, e.left().depth()) + stencil_reach(st, e.left(), p);
  const double r = fd_step(p, e.right().depth()) + stencil_reach(st, e.right(), p);
  return std::max(l, r);
}

void check_indices(const SubSpaceTime& st, const BracketExpr& e) {
  if (e.is_field()) {
    if (e.index() >= st.rank()) throw ConfigError("frame index out of range");
    return;
  }
  check_indices(st, e.left());
  check_indices(st, e.right());
}

}  // namespace

Vec evaluate_field(const SubSpaceTime& st, const BracketExpr& e, const Vec& p) {
  check_indices(st, e);
  const double reach = stencil_reach(st, e, p);
  if (!st.domain().contains(p)) throw DomainError("point outside domain: " + format_point(p));
  if (reach > 0) {
    for (int i = 0; i < st.dim(); ++i)
      if (p[i] - reach < st.domain().lo[i] || p[i] + reach > st.domain().hi[i])
        throw DomainError("point too close to the domain boundary for the bracket stencil");
  }
  return eval(st, e, p);
}

Vec lie_bracket(const SubSpaceTime& st, const BracketExpr& a, const BracketExpr& b, const Vec& p) {
  return evaluate_field(st, BracketExpr::bracket(a, b), p);
}

Vec lie_bracket(const SubSpaceTime& st, int i, int j, const Vec& p) {
  return lie_bracket(st, BracketExpr::field(i), BracketExpr::field(j), p);
}

bool two_step_check(const SubSpaceTime& st, const Vec& p) {
  const int n = st.dim(), k = st.rank();
  Eigen::MatrixXd M(n, k + k * (k - 1) / 2);
  M.leftCols(k) = st.frame(p);
  int col = k;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) M.col(col++) = lie_bracket(st, i, j, p);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double tol = 1e-6 * std::max(1.0, s[0]);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  return rank == n;
}

// ---------------------------------------------------------------------------
// Extension

ExtendedMetric::ExtendedMetric(SubSpaceTime base, double lambda, MatrixField aux)
    : base_(std::move(base)), lambda_(lambda), aux_(std::move(aux)) {
  if (!(lambda > 0)) throw ConfigError("lambda must be positive");
}

Mat ExtendedMetric::aux(const Vec& p) const {
  if (aux_) return aux_(p);
  return Mat::Identity(base_.dim(), base_.dim());
}

Mat ExtendedMetric::at(const Vec& p) const {
  const int n = base_.dim();
  const Mat F = base_.frame(p);
  const Mat H = aux(p);
  const Mat g = base_.metric(p);
  const Mat FtH = F.transpose() * H;
  const Mat P = (FtH * F).ldlt().solve(FtH);  // k x n, P F = I
  const Mat Q = Mat::Identity(n, n) - F * P;  // h-orthogonal projector onto D-perp
  Mat G = P.transpose() * g * P + lambda_ * lambda_ * Q.transpose() * H * Q;
  return 0.5 * (G + G.transpose());
}

ExtendedMetric extend_metric(const SubSpaceTime& st, double lambda) {
  return ExtendedMetric(st, lambda);
}

}  // namespace causalreach

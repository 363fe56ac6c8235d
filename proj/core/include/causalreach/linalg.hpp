#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace causalreach {

// Dimensions never exceed kMaxDim, so every vector and matrix below lives on
// the stack.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

Vec make_vec(std::initializer_list<double> values);

/// Parses "1,2.5,-3" into a vector. Throws ConfigError on malformed input.
Vec parse_point(std::string_view text);
std::string format_point(const Vec& p);

/// Closed axis-aligned box.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);

  static Box cube(int dim, double half_width);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& p) const;
  bool contains_open(const Vec& p) const;
  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }
  Box expanded(double margin) const;
  static Box centered(const Vec& c, double half_width);
};

}  // namespace causalreach

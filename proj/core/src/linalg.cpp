#include "causalreach/linalg.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "causalreach/errors.hpp"

namespace causalreach {

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Vec parse_point(std::string_view text) {
  std::vector<double> vals;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string token(text.substr(start, end - start));
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(token, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse coordinate '" + token + "' in '" + std::string(text) + "'");
    }
    while (used < token.size() && token[used] == ' ') ++used;
    if (used != token.size())
      throw ConfigError("trailing characters in coordinate '" + token + "'");
    vals.push_back(x);
    start = end + 1;
  }
  if (vals.empty() || static_cast<int>(vals.size()) > kMaxDim)
    throw ConfigError("point must have 1.." + std::to_string(kMaxDim) + " coordinates");
  Vec v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

std::string format_point(const Vec& p) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (i) os << ',';
    os << p[i];
  }
  return os.str();
}

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw ConfigError("box corners differ in dimension");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw ConfigError("box must have lo < hi on every axis");
}

Box Box::cube(int dim, double half_width) {
  return Box(Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width));
}

bool Box::contains(const Vec& p) const {
  if (p.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!(p[i] >= lo[i] && p[i] <= hi[i])) return false;
  return true;
}

bool Box::contains_open(const Vec& p) const {
  if (p.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (!(p[i] > lo[i] && p[i] < hi[i])) return false;
  return true;
}

Box Box::expanded(double margin) const {
  return Box(lo.array() - margin, hi.array() + margin);
}

Box Box::centered(const Vec& c, double half_width) {
  return Box(c.array() - half_width, c.array() + half_width);
}

}  // namespace causalreach

#include "causalreach/manifold_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <variant>

#include "causalreach/errors.hpp"

namespace causalreach {

namespace {

using nlohmann::json;

struct Coefficient;
using CoefficientPtr = std::shared_ptr<const Coefficient>;

struct Monomial {
  double c;
  std::vector<int> powers;
};

struct Blend {
  int axis;
  double from, to;
  CoefficientPtr below, above;
};

struct Coefficient {
  std::variant<double, std::vector<Monomial>, Blend> form;

  bool constant() const { return std::holds_alternative<double>(form); }

  double operator()(const Vec& p) const {
    if (const double* c = std::get_if<double>(&form)) return *c;
    if (const auto* terms = std::get_if<std::vector<Monomial>>(&form)) {
      double sum = 0.0;
      for (const Monomial& m : *terms) {
        double v = m.c;
        for (std::size_t i = 0; i < m.powers.size(); ++i)
          if (m.powers[i] != 0) v *= std::pow(p[static_cast<int>(i)], m.powers[i]);
        sum += v;
      }
      return sum;
    }
    const Blend& b = std::get<Blend>(form);
    const double s = std::clamp((p[b.axis] - b.from) / (b.to - b.from), 0.0, 1.0);
    const double w = s * s * (3.0 - 2.0 * s);
    return (1.0 - w) * (*b.below)(p) + w * (*b.above)(p);
  }
};

CoefficientPtr parse_coefficient(const json& j, int dim, const std::string& where) {
  auto out = std::make_shared<Coefficient>();
  if (j.is_number()) {
    out->form = j.get<double>();
  } else if (j.is_object() && j.contains("terms")) {
    std::vector<Monomial> terms;
    for (const json& t : j.at("terms")) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_array())
        throw ConfigError(where + ": a term is [coefficient, [exponents]]");
      Monomial m{t[0].get<double>(), t[1].get<std::vector<int>>()};
      if (static_cast<int>(m.powers.size()) != dim)
        throw ConfigError(where + ": exponent list must have " + std::to_string(dim) + " entries");
      for (int e : m.powers)
        if (e < 0) throw ConfigError(where + ": negative exponent");
      terms.push_back(std::move(m));
    }
    out->form = std::move(terms);
  } else if (j.is_object() && j.contains("smoothstep")) {
    const json& s = j.at("smoothstep");
    Blend b{s.at("axis").get<int>(), s.at("from").get<double>(), s.at("to").get<double>(),
            parse_coefficient(j.at("below"), dim, where + ".below"),
            parse_coefficient(j.at("above"), dim, where + ".above")};
    if (b.axis < 0 || b.axis >= dim) throw ConfigError(where + ": smoothstep axis out of range");
    if (!(b.to > b.from)) throw ConfigError(where + ": smoothstep needs from < to");
    out->form = std::move(b);
  } else {
    throw ConfigError(where + ": expected a number, {\"terms\": ...} or {\"smoothstep\": ...}");
  }
  return out;
}

std::vector<CoefficientPtr> parse_row(const json& j, std::size_t size, int dim,
                                      const std::string& where) {
  if (!j.is_array() || j.size() != size)
    throw ConfigError(where + ": expected an array of " + std::to_string(size) + " coefficients");
  std::vector<CoefficientPtr> row;
  for (std::size_t i = 0; i < size; ++i)
    row.push_back(parse_coefficient(j[i], dim, where + "[" + std::to_string(i) + "]"));
  return row;
}

Vec parse_vec(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(where + ": expected " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

SubSpaceTime manifold_from_json(const json& doc) {
  try {
    const int n = doc.at("dim").get<int>();
    const int k = doc.at("rank").get<int>();
    if (n < 1 || n > kMaxDim) throw ConfigError("dim must be in 1.." + std::to_string(kMaxDim));
    if (k < 2 || k > n) throw ConfigError("rank must be in 2..dim");
    const auto un = static_cast<std::size_t>(n), uk = static_cast<std::size_t>(k);

    std::vector<std::vector<CoefficientPtr>> frame, metric;
    const json& fj = doc.at("frame");
    if (!fj.is_array() || fj.size() != uk)
      throw ConfigError("frame: expected " + std::to_string(k) + " columns");
    for (std::size_t j = 0; j < uk; ++j)
      frame.push_back(parse_row(fj[j], un, n, "frame[" + std::to_string(j) + "]"));
    const json& mj = doc.at("metric");
    if (!mj.is_array() || mj.size() != uk)
      throw ConfigError("metric: expected " + std::to_string(k) + " rows");
    for (std::size_t i = 0; i < uk; ++i)
      metric.push_back(parse_row(mj[i], uk, n, "metric[" + std::to_string(i) + "]"));
    const auto time = parse_row(doc.at("time_orientation"), uk, n, "time_orientation");

    bool constant = true;
    for (const auto& row : metric)
      for (const auto& c : row) constant = constant && c->constant();
    for (const auto& c : time) constant = constant && c->constant();

    SubSpaceTimeFields f;
    f.name = doc.value("name", std::string("user"));
    f.dim = n;
    f.rank = k;
    f.domain = Box(parse_vec(doc.at("domain").at("lo"), n, "domain.lo"),
                   parse_vec(doc.at("domain").at("hi"), n, "domain.hi"));
    f.frame = [frame, n, k](const Vec& p) {
      Mat F(n, k);
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) F(i, j) = (*frame[j][i])(p);
      return F;
    };
    f.metric = [metric, k](const Vec& p) {
      Mat G(k, k);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) G(i, j) = (*metric[i][j])(p);
      return Mat(0.5 * (G + G.transpose()));
    };
    f.time_orientation = [time, k](const Vec& p) {
      Vec c(k);
      for (int i = 0; i < k; ++i) c[i] = (*time[i])(p);
      return c;
    };
    f.constant_metric = constant;
    return SubSpaceTime(std::move(f));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifold document: ") + e.what());
  }
}

SubSpaceTime load_manifold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifold file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("manifold file " + path + ": " + e.what());
  }
  return manifold_from_json(doc);
}

}  // namespace causalreach

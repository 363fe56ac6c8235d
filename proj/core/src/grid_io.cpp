#include "causalreach/grid_io.hpp"

#include <fstream>
#include <sstream>

#include "causalreach/errors.hpp"

namespace causalreach {

namespace {

nlohmann::ordered_json vec_json(const Vec& v) {
  auto a = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec json_vec(const nlohmann::json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

std::size_t slice_count(const ReachGrid& g) {
  std::size_t n = 1;
  for (int a = 2; a < g.dim(); ++a) n *= static_cast<std::size_t>(g.dims()[a]);
  return n;
}

}  // namespace

nlohmann::ordered_json grid_header(const ReachGrid& g) {
  nlohmann::ordered_json j;
  j["box"] = {{"lo", vec_json(g.box().lo)}, {"hi", vec_json(g.box().hi)}};
  j["dims"] = g.dims();
  j["semantics"] = std::string(to_string(g.semantics()));
  const GridMeta& m = g.meta();
  j["meta"] = {{"manifold", m.manifold},
               {"source", vec_json(m.source)},
               {"direction", std::string(to_string(m.direction))},
               {"config_digest", m.config_digest},
               {"samples", m.samples},
               {"truncated", m.truncated}};
  j["marked"] = g.count();
  return j;
}

std::string slice_pgm(const ReachGrid& g, std::size_t slice) {
  const int w = g.dims()[0];
  const int h = g.dim() > 1 ? g.dims()[1] : 1;
  const std::size_t base = slice * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::ostringstream os;
  os << "P2\n" << w << ' ' << h << "\n1\n";
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (c) os << ' ';
      os << (g.marked(base + static_cast<std::size_t>(r) * w + c) ? 1 : 0);
    }
    os << '\n';
  }
  return os.str();
}

GridFiles write_grid(const std::filesystem::path& dir, const std::string& stem,
                     const ReachGrid& g) {
  std::filesystem::create_directories(dir);
  GridFiles files;
  files.header = dir / (stem + ".json");
  files.cells_csv = dir / (stem + ".csv");

  {
    std::ofstream csv(files.cells_csv);
    for (int a = 0; a < g.dim(); ++a) csv << (a ? "," : "") << "i" << a;
    csv << '\n';
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
      if (!g.marked(i)) continue;
      const auto idx = g.unravel(i);
      for (std::size_t a = 0; a < idx.size(); ++a) csv << (a ? "," : "") << idx[a];
      csv << '\n';
    }
  }
  const std::size_t slices = slice_count(g);
  for (std::size_t s = 0; s < slices; ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "_slice_%03zu.pgm", s);
    files.slices.push_back(dir / (stem + name));
    std::ofstream(files.slices.back()) << slice_pgm(g, s);
  }

  auto header = grid_header(g);
  header["cells_csv"] = files.cells_csv.filename().string();
  header["slices"] = slices;
  std::ofstream(files.header) << header.dump(2) << '\n';
  return files;
}

ReachGrid read_grid(const std::filesystem::path& header_path) {
  std::ifstream in(header_path);
  if (!in) throw ConfigError("cannot open grid header " + header_path.string());
  nlohmann::json j;
  try {
    in >> j;
    GridMeta meta;
    const auto& m = j.at("meta");
    meta.manifold = m.value("manifold", "");
    meta.source = json_vec(m.at("source"));
    meta.direction = m.at("direction").get<std::string>() == "past" ? Direction::Past : Direction::Future;
    meta.config_digest = m.value("config_digest", "");
    meta.samples = m.value("samples", std::uint64_t{0});
    meta.truncated = m.value("truncated", std::uint64_t{0});
    ReachGrid g(Box(json_vec(j.at("box").at("lo")), json_vec(j.at("box").at("hi"))),
                j.at("dims").get<std::vector<int>>(),
                grid_semantics_from_string(j.at("semantics").get<std::string>()), meta);
    std::ifstream csv(header_path.parent_path() / j.at("cells_csv").get<std::string>());
    if (!csv) throw ConfigError("missing cell CSV next to " + header_path.string());
    std::string line;
    std::getline(csv, line);
    std::vector<int> idx(static_cast<std::size_t>(g.dim()));
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      for (auto& v : idx) {
        ls >> v;
        ls.ignore(1);
        if (!ls && !ls.eof()) throw ConfigError("malformed cell row '" + line + "'");
      }
      for (int a = 0; a < g.dim(); ++a)
        if (idx[a] < 0 || idx[a] >= g.dims()[a]) throw ConfigError("cell index out of range");
      g.mark(g.ravel(idx));
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed grid header: " + std::string(e.what()));
  }
}

}  // namespace causalreach

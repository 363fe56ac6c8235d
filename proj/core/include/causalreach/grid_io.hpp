#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalreach/grid.hpp"

namespace causalreach {

nlohmann::ordered_json grid_header(const ReachGrid& g);

struct GridFiles {
  std::filesystem::path header;
  std::filesystem::path cells_csv;
  std::vector<std::filesystem::path> slices;
};

/// Writes <stem>.json, <stem>.csv (marked cell indices) and one P2 PGM per
/// slice (<stem>_slice_NNN.pgm, axes 0 and 1 as columns and rows).
GridFiles write_grid(const std::filesystem::path& dir, const std::string& stem,
                     const ReachGrid& g);
ReachGrid read_grid(const std::filesystem::path& header);

/// P2 image of the slice with flat index `slice` over axes 2..n-1.
std::string slice_pgm(const ReachGrid& g, std::size_t slice);

}  // namespace causalreach

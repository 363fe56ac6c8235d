#pragma once

#include <string>

#include <json.hpp>

#include "causalreach/geometry.hpp"

namespace causalreach {

/// Builds a SubSpaceTime from a JSON document:
///
///   {
///     "name": "example", "dim": 3, "rank": 2,
///     "domain": {"lo": [-1, -1, -1], "hi": [1, 1, 1]},
///     "frame": [[1, 0, {"terms": [[-0.5, [0, 1, 0]]]}], [0, 1, 0]],
///     "metric": [[-1, 0], [0, 1]],
///     "time_orientation": [1, 0]
///   }
///
/// "frame" lists the k columns X_j, each with n components. Every coefficient
/// is a number, a polynomial {"terms": [[c, [e_1, ..., e_n]], ...]}, or a
/// blend {"smoothstep": {"axis": i, "from": a, "to": b}, "below": f, "above": g}
/// that equals f for x_i <= a, g for x_i >= b and interpolates with
/// 3s^2 - 2s^3 in between. Throws ConfigError on malformed input.
SubSpaceTime manifold_from_json(const nlohmann::json& doc);
SubSpaceTime load_manifold(const std::string& path);

}  // namespace causalreach

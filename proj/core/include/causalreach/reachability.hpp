#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalreach/action.hpp"
#include "causalreach/curves.hpp"
#include "causalreach/grid.hpp"

namespace causalreach {

struct ReachConfig {
  double horizon = 2.5;
  std::uint64_t samples = 10000;
  /// Maximum number of constant-control intervals per trajectory.
  int steps = 8;
  /// RK4 steps over the full horizon.
  int integrator_steps = 256;
  std::uint64_t seed = 1;
  Strictness strictness = Strictness::Timelike;
  double cone_margin = 0.0;
  int resolution = 64;
  /// Grid box; the structure's domain (or the fundamental box) when unset.
  std::optional<Box> box;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 1;
  /// Covering copies on each side for quotient sampling.
  int copies = 3;
  /// Extra sampling rounds started from endpoints of the previous round
  /// (canonicalized). Each round spreads `samples` over `relay_points` starts.
  int relay_rounds = 0;
  int relay_points = 16;
  /// Switch times are drawn on [0, switch_span] and cut at the horizon; 0
  /// means the horizon. With a fixed span a shorter horizon samples prefixes
  /// of the longer one's trajectories.
  double switch_span = 0.0;

  double time_span() const { return switch_span > 0 ? switch_span : horizon; }

  void validate() const;
  nlohmann::ordered_json to_json() const;
  std::string digest() const;
};

/// Controls of trajectory `index`. Index 0 is the pure time-orientation flow;
/// every other index draws 1..steps intervals with uniform switch times and
/// directions uniform in the closed unit ball scaled by `scale`.
ControlSignal sample_controls(const ReachConfig& cfg, int rank, std::uint64_t index, double scale);

/// Receives the RK4 segments of sampled trajectories. One sink per worker;
/// sinks are merged afterwards, so they must only accumulate commutatively.
class TrajectorySink {
 public:
  virtual ~TrajectorySink() = default;
  virtual void begin(std::uint64_t /*index*/, int /*pass*/) {}
  /// Segment a -> b (cover coordinates) ending at curve time t_b; len_* are
  /// accumulated Lorentzian lengths.
  virtual void segment(const Vec& a, const Vec& b, double len_a, double len_b, double t_b) = 0;
  virtual void end(bool /*truncated*/) {}
};

using SinkFactory = std::function<std::unique_ptr<TrajectorySink>()>;

/// Integrates cfg.samples sampled trajectories from p and feeds every sink.
/// Nonspacelike sampling with cone_margin > 0 runs each index twice (scaled
/// and unscaled), so a Timelike run's segments are a subset.
std::vector<std::unique_ptr<TrajectorySink>> run_trajectories(const SubSpaceTime& st, const Vec& p,
                                                              Direction dir, const ReachConfig& cfg,
                                                              const SinkFactory& make_sink);

/// Marks cells along a segment subdivided to half the smallest cell size.
void mark_segment(ReachGrid& g, const Vec& a, const Vec& b, const Canonicalizer& canon = {});

/// Grids at several resolutions from one sampling pass. `action` may be null;
/// otherwise sampling runs in the covering box and points are canonicalized.
std::vector<ReachGrid> sample_reach_multi(const SubSpaceTime& st, const GroupAction* action,
                                          const Vec& p, Direction dir, const ReachConfig& cfg,
                                          const std::vector<int>& resolutions);

ReachGrid sample_reach(const SubSpaceTime& st, const Vec& p, Direction dir, const ReachConfig& cfg);

enum class ChronVerdict { Interior, Boundary, Outside, Unknown };
std::string_view to_string(ChronVerdict v);

/// Verdict for q from grids at increasing resolutions.
ChronVerdict classify_in_grids(const std::vector<ReachGrid>& grids, const Vec& q);

ChronVerdict chron_open_at(const SubSpaceTime& st, const Vec& p, const Vec& q,
                           const ReachConfig& cfg, const GroupAction* action = nullptr);
/// p <<_o q: q in the interior of I+(p).
bool open_chron(const SubSpaceTime& st, const Vec& p, const Vec& q, const ReachConfig& cfg,
                const GroupAction* action = nullptr);
/// p in the interior of I-(q).
bool open_chron_past(const SubSpaceTime& st, const Vec& q, const Vec& p, const ReachConfig& cfg,
                     const GroupAction* action = nullptr);

/// I+(p) ∩ I-(q) at cfg.resolution (eroded first when opened). Cells within
/// one cell of the generators are cleared: a cell there can meet both sets
/// through different points.
ReachGrid alexandrov_interval(const SubSpaceTime& st, const Vec& p, const Vec& q,
                              const ReachConfig& cfg, bool opened,
                              const GroupAction* action = nullptr);
/// Interval from precomputed future (of p) and past (of q) grids.
ReachGrid interval_from_grids(const ReachGrid& fut, const ReachGrid& past, const Vec& p,
                              const Vec& q, bool opened);
/// Same at several resolutions from shared sampling passes.
std::vector<ReachGrid> alexandrov_interval_multi(const SubSpaceTime& st, const Vec& p,
                                                 const Vec& q, const ReachConfig& cfg, bool opened,
                                                 const GroupAction* action,
                                                 const std::vector<int>& resolutions);

/// Flow of the time orientation (u = (1, 0, ..., 0)) for parameter t; negative
/// t flows into the past. Canonicalized when an action is given.
Vec time_flow(const SubSpaceTime& st, const Vec& p, double t, const GroupAction* action = nullptr);

/// Grid box used for a structure/action pair.
Box default_grid_box(const SubSpaceTime& st, const GroupAction* action, const ReachConfig& cfg);

}  // namespace causalreach

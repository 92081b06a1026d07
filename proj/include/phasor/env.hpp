#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "phasor/graph.hpp"
#include "phasor/holo.hpp"
#include "phasor/rng.hpp"

namespace phasor {

inline constexpr int kMazeActions = 4;  // N, E, S, W

// Procedural gridworld: spanning-tree maze plus loop-adding wall removals.
// Walls live between adjacent cells (cell-pair blockset).
struct GridMaze {
  int width = 8;
  int height = 8;
  std::set<std::pair<int, int>> blocked;  // canonical (lo, hi) cell pairs
  int goal = 0;
  int seen_x_limit = 4;  // seen region: x < seen_x_limit

  int cells() const { return width * height; }
  int cell(int x, int y) const { return y * width + x; }
  int cx(int c) const { return c % width; }
  int cy(int c) const { return c / width; }
  bool seen(int c) const { return cx(c) < seen_x_limit; }
  int step_cap() const { return 4 * (width + height); }

  bool wall_between(int a, int b) const;
  // Returns the destination cell, or the current cell when the move is
  // blocked by a wall or the boundary.
  int step_from(int c, int action) const;
  bool goal_reachable_from_all() const;
  std::vector<int> shortest_distances() const;  // from goal; -1 unreachable

  // Spanning tree via recursive backtracker, then `extra_openings` more
  // wall removals to add loops.
  static GridMaze generate(int width, int height, int extra_openings, Rng& rng);

  // Insert one random wall that keeps the goal reachable from every cell
  // (detour probes). Returns false if no such wall exists.
  bool add_random_wall(Rng& rng);

  // Text format: (2w+1) x (2h+1) grid, '#' wall, '.' free, 'S' seen-region
  // cell, 'G' goal cell.
  std::string serialize() const;
  static GridMaze parse(const std::string& text);
};

struct MazeRewardSpec {
  double goal_reward = 1.0;
  double step_cost = -0.01;
};

struct QTable {
  RMat q;  // cells x actions
  static QTable make(int cells) { return {RMat::Zero(cells, kMazeActions)}; }
  // Greedy action; ties broken by the rng when given, else lowest index.
  int greedy(int state, Rng* tie_rng = nullptr) const;
};

int winner_take_all(const RVec& scores);  // lowest-index tie-break

// Linear readout on [cos phi; sin phi; r] features of selected nodes.
struct ReadoutHead {
  enum class Mode { regression, winner_take_all };
  Mode mode = Mode::regression;
  RMat weights;  // outputs x features
  bool use_cos = true, use_sin = true, use_amplitude = true;
  std::vector<int> nodes;  // feature source nodes
};

RVec readout_features(const ReadoutHead& head, const CVec& z);
RVec readout_apply(const ReadoutHead& head, const CVec& z);
int decode_action(const ReadoutHead& head, const CVec& z);

// Deterministic injective observation code: per (state, node) pseudo-random
// drive values, independent of the run seed.
InputSignal encode_observation(int observation, int n_states, int nodes,
                               InputSignal::Mode mode, double amplitude = 0.2);

// ---------------------------------------------------------------------------
// Dyna-Q baseline: tabular Q plus an exact deterministic (s, a) -> (s', r)
// model replayed `planning_steps` times per real step.
// ---------------------------------------------------------------------------

struct DynaQParams {
  int episodes = 60;
  int planning_steps = 10;
  double alpha = 0.2;
  double gamma = 0.95;
  double epsilon = 0.15;
  MazeRewardSpec reward;
  bool extrinsic_reward = true;  // false during latent exploration
};

struct DynaModelEntry {
  int next = -1;
  double reward = 0.0;
  bool known = false;
};

struct DynaQAgent {
  QTable q;
  std::vector<std::array<DynaModelEntry, kMazeActions>> model;
  std::vector<std::pair<int, int>> experienced;  // (state, action), first-seen order

  static DynaQAgent make(int cells);
  // Relabel model rewards once the goal is revealed (latent learning).
  void plant_goal_reward(const GridMaze& maze, const MazeRewardSpec& reward);
  // Planning sweeps without new environment steps.
  void plan(int sweeps, double alpha, double gamma, Rng& rng);
};

// Runs episodes from seen-region starts (uniform over seen free cells).
DynaQAgent dyna_q(const GridMaze& maze, const DynaQParams& params, Rng& rng);

// ---------------------------------------------------------------------------
// Holographic transition model + REM dream replay.
// ---------------------------------------------------------------------------

struct PhasorCodebook {
  int dim = 0;
  std::vector<CVec> codes;  // unit phasors, one per state
  static PhasorCodebook make(int dim, int n_states, Rng& rng);
  // Matched-filter decode; optionally reports normalized similarity.
  int decode(const CVec& field, double* similarity = nullptr) const;
};

struct HoloTransitionModel {
  int dim = 0;
  std::array<CMat, kMazeActions> action_weights;
  std::vector<double> reward;      // per cell
  std::vector<long> transitions_stored;
  std::vector<int> visit_order;    // cells in first-visit order

  static HoloTransitionModel make(int dim, int cells, double default_reward);
  void store_transition(int state, int action, int next, const PhasorCodebook& cb);
  void observe_reward(int cell, double r) { reward[static_cast<std::size_t>(cell)] = r; }
  bool empty() const;
  // Reconstructed next-state field for an action (gate_rotate retrieval).
  CVec predict_field(int action, const CVec& state, double beta_coh) const;
};

struct WakeEpisodeParams {
  double epsilon = 0.2;
  double alpha = 0.2;
  double gamma = 0.95;
  MazeRewardSpec reward;
  bool extrinsic_reward = true;  // latent phase: false (no Q drive, no reward model)
  bool learn_q = true;
};

struct MazeEpisode {
  std::vector<int> states;
  std::vector<int> actions;
  double total_reward = 0.0;
  bool reached_goal = false;
  bool truncated = false;
};

MazeEpisode wake_episode(const GridMaze& maze, QTable& q,
                         HoloTransitionModel* model, const PhasorCodebook* cb,
                         const WakeEpisodeParams& params, int start, Rng& rng);

struct ReplayParams {
  int rollouts = 200;
  int horizon = 20;
  double perturbation = 0.1;     // phase noise on dreamed states
  double old_bias = 0.0;         // probability of sampling an early-visited start
  bool gate_on = true;           // false: generate dreams, apply no updates
  bool scramble = false;         // permute phases of reconstructed states
  double similarity_floor = 0.2; // below: truncate rollout
  int terminal = -1;             // absorbing cell; rollouts stop on entry
  double alpha = 0.2;
  double gamma = 0.95;
  double beta_coh = 5.0;
};

struct ReplayStats {
  int rollouts = 0;
  int truncated = 0;
  long updates = 0;
};

// Dream rollouts from the transition model; never touches the environment.
ReplayStats rem_replay(const HoloTransitionModel& model, const PhasorCodebook& cb,
                       QTable& q, const ReplayParams& params, Rng& rng);

struct RegionSuccess {
  double seen = 0.0;
  double unseen = 0.0;
  double overall = 0.0;
  int seen_starts = 0;
  int unseen_starts = 0;
};

// Greedy policy success (goal within the step cap) from every free cell,
// reported per region. Ties in Q are broken by tie_rng.
RegionSuccess evaluate_regions(const GridMaze& maze, const QTable& q,
                               const MazeRewardSpec& reward, Rng& tie_rng,
                               int episodes_per_start = 1);

}  // namespace phasor

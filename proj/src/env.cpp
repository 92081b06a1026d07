#include "phasor/env.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace phasor {

namespace {

constexpr int kDx[kMazeActions] = {0, 1, 0, -1};  // N, E, S, W
constexpr int kDy[kMazeActions] = {-1, 0, 1, 0};

std::pair<int, int> canonical(int a, int b) {
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

bool GridMaze::wall_between(int a, int b) const {
  return blocked.count(canonical(a, b)) > 0;
}

int GridMaze::step_from(int c, int action) const {
  const int x = cx(c) + kDx[action];
  const int y = cy(c) + kDy[action];
  if (x < 0 || x >= width || y < 0 || y >= height) return c;
  const int next = cell(x, y);
  return wall_between(c, next) ? c : next;
}

std::vector<int> GridMaze::shortest_distances() const {
  std::vector<int> dist(static_cast<std::size_t>(cells()), -1);
  std::queue<int> frontier;
  dist[static_cast<std::size_t>(goal)] = 0;
  frontier.push(goal);
  while (!frontier.empty()) {
    const int c = frontier.front();
    frontier.pop();
    for (int a = 0; a < kMazeActions; ++a) {
      const int next = step_from(c, a);
      if (next == c) continue;
      auto& d = dist[static_cast<std::size_t>(next)];
      if (d < 0) {
        d = dist[static_cast<std::size_t>(c)] + 1;
        frontier.push(next);
      }
    }
  }
  return dist;
}

bool GridMaze::goal_reachable_from_all() const {
  const auto dist = shortest_distances();
  return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
}

GridMaze GridMaze::generate(int width, int height, int extra_openings, Rng& rng) {
  GridMaze maze;
  maze.width = width;
  maze.height = height;
  maze.seen_x_limit = width / 2;

  // Start fully walled, carve a spanning tree.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int c = maze.cell(x, y);
      if (x + 1 < width) maze.blocked.insert(canonical(c, maze.cell(x + 1, y)));
      if (y + 1 < height) maze.blocked.insert(canonical(c, maze.cell(x, y + 1)));
    }
  }
  std::vector<bool> visited(static_cast<std::size_t>(maze.cells()), false);
  std::vector<int> stack;
  stack.push_back(0);
  visited[0] = true;
  while (!stack.empty()) {
    const int c = stack.back();
    int options[kMazeActions];
    int count = 0;
    for (int a = 0; a < kMazeActions; ++a) {
      const int x = maze.cx(c) + kDx[a];
      const int y = maze.cy(c) + kDy[a];
      if (x < 0 || x >= width || y < 0 || y >= height) continue;
      if (!visited[static_cast<std::size_t>(maze.cell(x, y))]) options[count++] = maze.cell(x, y);
    }
    if (count == 0) {
      stack.pop_back();
      continue;
    }
    const int next = options[rng.uniform_index(static_cast<std::uint64_t>(count))];
    maze.blocked.erase(canonical(c, next));
    visited[static_cast<std::size_t>(next)] = true;
    stack.push_back(next);
  }

  // Loop-adding removals.
  std::vector<std::pair<int, int>> walls(maze.blocked.begin(), maze.blocked.end());
  rng.shuffle(walls);
  const int removals = std::min<int>(extra_openings, static_cast<int>(walls.size()));
  for (int i = 0; i < removals; ++i) maze.blocked.erase(walls[static_cast<std::size_t>(i)]);

  // Goal in the unseen half, far from the origin.
  maze.goal = maze.cell(width - 1, height - 1);
  return maze;
}

bool GridMaze::add_random_wall(Rng& rng) {
  std::vector<std::pair<int, int>> candidates;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int c = cell(x, y);
      if (x + 1 < width && !wall_between(c, cell(x + 1, y)))
        candidates.push_back(canonical(c, cell(x + 1, y)));
      if (y + 1 < height && !wall_between(c, cell(x, y + 1)))
        candidates.push_back(canonical(c, cell(x, y + 1)));
    }
  }
  rng.shuffle(candidates);
  for (const auto& wall : candidates) {
    blocked.insert(wall);
    if (goal_reachable_from_all()) return true;
    blocked.erase(wall);
  }
  return false;
}

std::string GridMaze::serialize() const {
  const int rows = 2 * height + 1;
  const int cols = 2 * width + 1;
  std::vector<std::string> grid(static_cast<std::size_t>(rows),
                                std::string(static_cast<std::size_t>(cols), '#'));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int c = cell(x, y);
      char ch = '.';
      if (c == goal)
        ch = 'G';
      else if (seen(c))
        ch = 'S';
      grid[static_cast<std::size_t>(2 * y + 1)][static_cast<std::size_t>(2 * x + 1)] = ch;
      if (x + 1 < width && !wall_between(c, cell(x + 1, y)))
        grid[static_cast<std::size_t>(2 * y + 1)][static_cast<std::size_t>(2 * x + 2)] = '.';
      if (y + 1 < height && !wall_between(c, cell(x, y + 1)))
        grid[static_cast<std::size_t>(2 * y + 2)][static_cast<std::size_t>(2 * x + 1)] = '.';
    }
  }
  std::string out;
  for (const auto& row : grid) {
    out += row;
    out += '\n';
  }
  return out;
}

GridMaze GridMaze::parse(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() < 3 || lines.size() % 2 == 0)
    throw std::invalid_argument("maze text: bad row count");
  const int height = static_cast<int>(lines.size() - 1) / 2;
  const int cols = static_cast<int>(lines[0].size());
  if (cols < 3 || cols % 2 == 0) throw std::invalid_argument("maze text: bad column count");
  const int width = (cols - 1) / 2;

  GridMaze maze;
  maze.width = width;
  maze.height = height;
  maze.goal = -1;
  int max_seen_x = -1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::string& row = lines[static_cast<std::size_t>(2 * y + 1)];
      if (static_cast<int>(row.size()) != cols)
        throw std::invalid_argument("maze text: ragged rows");
      const char ch = row[static_cast<std::size_t>(2 * x + 1)];
      const int c = maze.cell(x, y);
      if (ch == 'G')
        maze.goal = c;
      else if (ch == 'S')
        max_seen_x = std::max(max_seen_x, x);
      else if (ch != '.')
        throw std::invalid_argument("maze text: unexpected cell character");
      if (x + 1 < width && row[static_cast<std::size_t>(2 * x + 2)] == '#')
        maze.blocked.insert(canonical(c, maze.cell(x + 1, y)));
      if (y + 1 < height &&
          lines[static_cast<std::size_t>(2 * y + 2)][static_cast<std::size_t>(2 * x + 1)] == '#')
        maze.blocked.insert(canonical(c, maze.cell(x, y + 1)));
    }
  }
  if (maze.goal < 0) throw std::invalid_argument("maze text: missing goal");
  maze.seen_x_limit = max_seen_x + 1;
  return maze;
}

int QTable::greedy(int state, Rng* tie_rng) const {
  const double best = q.row(state).maxCoeff();
  int ties[kMazeActions];
  int count = 0;
  for (int a = 0; a < kMazeActions; ++a) {
    if (q(state, a) == best) ties[count++] = a;
  }
  if (count == 1 || tie_rng == nullptr) return ties[0];
  return ties[tie_rng->uniform_index(static_cast<std::uint64_t>(count))];
}

int winner_take_all(const RVec& scores) {
  int best = 0;
  for (int i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return best;
}

RVec readout_features(const ReadoutHead& head, const CVec& z) {
  const int per_node = (head.use_cos ? 1 : 0) + (head.use_sin ? 1 : 0) +
                       (head.use_amplitude ? 1 : 0);
  RVec out(static_cast<int>(head.nodes.size()) * per_node);
  int k = 0;
  for (const int node : head.nodes) {
    const Complex v = z(node);
    const double r = std::abs(v);
    const double phi = r < kAmplitudeFloor ? 0.0 : std::arg(v);
    if (head.use_cos) out(k++) = std::cos(phi);
    if (head.use_sin) out(k++) = std::sin(phi);
    if (head.use_amplitude) out(k++) = r;
  }
  return out;
}

RVec readout_apply(const ReadoutHead& head, const CVec& z) {
  return head.weights * readout_features(head, z);
}

int decode_action(const ReadoutHead& head, const CVec& z) {
  return winner_take_all(readout_apply(head, z));
}

InputSignal encode_observation(int observation, int n_states, int nodes,
                               InputSignal::Mode mode, double amplitude) {
  if (observation < 0 || observation >= n_states)
    throw std::invalid_argument("encode_observation: observation out of range");
  InputSignal signal;
  signal.mode = mode;
  signal.values = CVec::Zero(nodes);
  const std::uint64_t base =
      Rng::fold(Rng::fold(0x0b5e7a11c0de5ull, "obs-code"),
                static_cast<std::uint64_t>(observation));
  for (int i = 0; i < nodes; ++i) {
    Rng r(Rng::fold(base, static_cast<std::uint64_t>(i)));
    signal.values(i) = Complex(amplitude * r.uniform(-1.0, 1.0), 0.0);
  }
  return signal;
}

DynaQAgent DynaQAgent::make(int cells) {
  DynaQAgent agent;
  agent.q = QTable::make(cells);
  agent.model.resize(static_cast<std::size_t>(cells));
  return agent;
}

void DynaQAgent::plant_goal_reward(const GridMaze& maze, const MazeRewardSpec& reward) {
  for (auto& row : model) {
    for (auto& entry : row) {
      if (!entry.known) continue;
      entry.reward = entry.next == maze.goal ? reward.goal_reward : reward.step_cost;
    }
  }
}

void DynaQAgent::plan(int sweeps, double alpha, double gamma, Rng& rng) {
  if (experienced.empty()) return;
  for (int k = 0; k < sweeps; ++k) {
    const auto [s, a] =
        experienced[rng.uniform_index(static_cast<std::uint64_t>(experienced.size()))];
    const DynaModelEntry& entry = model[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    const double target = entry.reward + gamma * q.q.row(entry.next).maxCoeff();
    q.q(s, a) += alpha * (target - q.q(s, a));
  }
}

DynaQAgent dyna_q(const GridMaze& maze, const DynaQParams& params, Rng& rng) {
  DynaQAgent agent = DynaQAgent::make(maze.cells());
  std::vector<int> seen_starts;
  for (int c = 0; c < maze.cells(); ++c) {
    if (maze.seen(c) && c != maze.goal) seen_starts.push_back(c);
  }
  for (int ep = 0; ep < params.episodes; ++ep) {
    int s = seen_starts[rng.uniform_index(static_cast<std::uint64_t>(seen_starts.size()))];
    for (int t = 0; t < maze.step_cap() && s != maze.goal; ++t) {
      const int a = rng.uniform() < params.epsilon
                        ? static_cast<int>(rng.uniform_index(kMazeActions))
                        : agent.q.greedy(s, &rng);
      const int next = maze.step_from(s, a);
      const double r = !params.extrinsic_reward ? 0.0
                       : next == maze.goal      ? params.reward.goal_reward
                                                : params.reward.step_cost;
      auto& entry = agent.model[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
      if (!entry.known) {
        entry.known = true;
        agent.experienced.emplace_back(s, a);
      }
      entry.next = next;
      entry.reward = r;
      if (params.extrinsic_reward) {
        const double target = r + params.gamma * agent.q.q.row(next).maxCoeff();
        agent.q.q(s, a) += params.alpha * (target - agent.q.q(s, a));
      }
      agent.plan(params.planning_steps, params.alpha, params.gamma, rng);
      s = next;
    }
  }
  return agent;
}

PhasorCodebook PhasorCodebook::make(int dim, int n_states, Rng& rng) {
  PhasorCodebook cb;
  cb.dim = dim;
  cb.codes.reserve(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) {
    CVec code(dim);
    for (int i = 0; i < dim; ++i) code(i) = std::polar(1.0, rng.uniform(-kPi, kPi));
    cb.codes.push_back(std::move(code));
  }
  return cb;
}

int PhasorCodebook::decode(const CVec& field, double* similarity) const {
  const double norm = field.norm();
  int best = 0;
  double best_score = -1.0;
  for (std::size_t s = 0; s < codes.size(); ++s) {
    const double score = std::abs(codes[s].dot(field));  // conj(code) . field
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(s);
    }
  }
  if (similarity) {
    const double denom = norm * std::sqrt(static_cast<double>(dim));
    *similarity = denom < kAmplitudeFloor ? 0.0 : best_score / denom;
  }
  return best;
}

HoloTransitionModel HoloTransitionModel::make(int dim, int cells, double default_reward) {
  HoloTransitionModel model;
  model.dim = dim;
  for (auto& w : model.action_weights) w = CMat::Zero(dim, dim);
  model.reward.assign(static_cast<std::size_t>(cells), default_reward);
  model.transitions_stored.assign(kMazeActions, 0);
  return model;
}

void HoloTransitionModel::store_transition(int state, int action, int next,
                                           const PhasorCodebook& cb) {
  const CVec& pre = cb.codes[static_cast<std::size_t>(state)];
  const CVec& post = cb.codes[static_cast<std::size_t>(next)];
  action_weights[static_cast<std::size_t>(action)] +=
      (post * pre.adjoint()) / static_cast<double>(dim);
  ++transitions_stored[static_cast<std::size_t>(action)];
  if (std::find(visit_order.begin(), visit_order.end(), state) == visit_order.end())
    visit_order.push_back(state);
}

bool HoloTransitionModel::empty() const {
  return std::all_of(transitions_stored.begin(), transitions_stored.end(),
                     [](long n) { return n == 0; });
}

CVec HoloTransitionModel::predict_field(int action, const CVec& state,
                                        double beta_coh) const {
  return retrieval_field(action_weights[static_cast<std::size_t>(action)], state,
                         CouplingKernel::gate_rotate, beta_coh);
}

MazeEpisode wake_episode(const GridMaze& maze, QTable& q,
                         HoloTransitionModel* model, const PhasorCodebook* cb,
                         const WakeEpisodeParams& params, int start, Rng& rng) {
  MazeEpisode ep;
  int s = start;
  ep.states.push_back(s);
  for (int t = 0; t < maze.step_cap(); ++t) {
    if (s == maze.goal) {
      ep.reached_goal = true;
      return ep;
    }
    const int a = rng.uniform() < params.epsilon
                      ? static_cast<int>(rng.uniform_index(kMazeActions))
                      : q.greedy(s, &rng);
    const int next = maze.step_from(s, a);
    const double r = !params.extrinsic_reward ? 0.0
                     : next == maze.goal      ? params.reward.goal_reward
                                              : params.reward.step_cost;
    ep.total_reward += r;
    if (model && cb) {
      model->store_transition(s, a, next, *cb);
      if (params.extrinsic_reward) model->observe_reward(next, r);
    }
    if (params.learn_q && params.extrinsic_reward) {
      const double target = r + params.gamma * q.q.row(next).maxCoeff();
      q.q(s, a) += params.alpha * (target - q.q(s, a));
    }
    ep.states.push_back(next);
    ep.actions.push_back(a);
    s = next;
  }
  ep.reached_goal = s == maze.goal;
  ep.truncated = !ep.reached_goal;
  return ep;
}

ReplayStats rem_replay(const HoloTransitionModel& model, const PhasorCodebook& cb,
                       QTable& q, const ReplayParams& params, Rng& rng) {
  ReplayStats stats;
  if (model.empty() || model.visit_order.empty()) return stats;
  const std::size_t half = std::max<std::size_t>(1, model.visit_order.size() / 2);
  for (int roll = 0; roll < params.rollouts; ++roll) {
    ++stats.rollouts;
    const std::size_t pick =
        rng.uniform() < params.old_bias
            ? rng.uniform_index(static_cast<std::uint64_t>(half))
            : rng.uniform_index(static_cast<std::uint64_t>(model.visit_order.size()));
    int s = model.visit_order[pick];
    for (int h = 0; h < params.horizon; ++h) {
      if (s == params.terminal) break;
      // Dreamed state: codebook entry with phase noise.
      CVec z = cb.codes[static_cast<std::size_t>(s)];
      if (params.perturbation > 0) {
        for (int i = 0; i < z.size(); ++i) {
          z(i) = std::polar(1.0, std::arg(z(i)) + rng.normal(0.0, params.perturbation));
        }
      }
      const int a = static_cast<int>(rng.uniform_index(kMazeActions));
      CVec field = model.predict_field(a, z, params.beta_coh);
      if (params.scramble) {
        std::vector<double> phases(static_cast<std::size_t>(field.size()));
        for (int i = 0; i < field.size(); ++i)
          phases[static_cast<std::size_t>(i)] = std::arg(field(i));
        rng.shuffle(phases);
        for (int i = 0; i < field.size(); ++i)
          field(i) = std::polar(std::abs(field(i)), phases[static_cast<std::size_t>(i)]);
      }
      double similarity = 0.0;
      const int next = cb.decode(field, &similarity);
      if (similarity < params.similarity_floor) {
        ++stats.truncated;
        break;
      }
      if (params.gate_on) {
        const double r = model.reward[static_cast<std::size_t>(next)];
        const double target = r + params.gamma * q.q.row(next).maxCoeff();
        q.q(s, a) += params.alpha * (target - q.q(s, a));
        ++stats.updates;
      }
      s = next;
    }
  }
  return stats;
}

RegionSuccess evaluate_regions(const GridMaze& maze, const QTable& q,
                               const MazeRewardSpec& reward, Rng& tie_rng,
                               int episodes_per_start) {
  (void)reward;
  RegionSuccess out;
  double seen_hits = 0.0, unseen_hits = 0.0;
  for (int start = 0; start < maze.cells(); ++start) {
    if (start == maze.goal) continue;
    double hits = 0.0;
    for (int rep = 0; rep < episodes_per_start; ++rep) {
      int s = start;
      for (int t = 0; t < maze.step_cap() && s != maze.goal; ++t) {
        s = maze.step_from(s, q.greedy(s, &tie_rng));
      }
      if (s == maze.goal) hits += 1.0;
    }
    const double rate = hits / episodes_per_start;
    if (maze.seen(start)) {
      ++out.seen_starts;
      seen_hits += rate;
    } else {
      ++out.unseen_starts;
      unseen_hits += rate;
    }
  }
  out.seen = out.seen_starts ? seen_hits / out.seen_starts : 0.0;
  out.unseen = out.unseen_starts ? unseen_hits / out.unseen_starts : 0.0;
  const int total = out.seen_starts + out.unseen_starts;
  out.overall = total ? (seen_hits + unseen_hits) / total : 0.0;
  return out;
}

}  // namespace phasor

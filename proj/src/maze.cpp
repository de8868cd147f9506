// Copyright 2026 The KOVA Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "kova/maze.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include "kova/errors.hpp"

namespace kova {

MazeSpec MazeSpec::parse(const std::string& text, StartPolicy start, double loss_threshold) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  const int n = static_cast<int>(rows.size());
  if (n < 1) throw ConfigError("maze layout is empty");

  MazeSpec spec;
  spec.n_ = n;
  spec.start_ = start;
  spec.loss_threshold_ = loss_threshold;
  spec.free_.assign(static_cast<std::size_t>(n) * n, false);
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[r].size()) != n) {
      throw ConfigError("maze layout must be square: row " + std::to_string(r) + " has " +
                        std::to_string(rows[r].size()) + " cells, expected " + std::to_string(n));
    }
    for (int c = 0; c < n; ++c) {
      const char ch = rows[r][c];
      if (ch != '.' && ch != '#') {
        throw ConfigError(std::string("maze layout: unexpected character '") + ch + "'");
      }
      spec.free_[static_cast<std::size_t>(r) * n + c] = (ch == '.');
    }
  }
  if (!spec.is_free(n - 1, n - 1)) throw ConfigError("maze exit (bottom-right) is blocked");
  if (!spec.is_free(0, 0)) throw ConfigError("maze start (top-left) is blocked");

  // Flood fill from the exit.
  std::vector<bool> reached(spec.free_.size(), false);
  std::deque<MazeCell> queue{{n - 1, n - 1}};
  reached.back() = true;
  while (!queue.empty()) {
    const MazeCell cur = queue.front();
    queue.pop_front();
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int r = cur.row + dr[k];
      const int c = cur.col + dc[k];
      if (!spec.is_free(r, c)) continue;
      const std::size_t idx = static_cast<std::size_t>(r) * n + c;
      if (reached[idx]) continue;
      reached[idx] = true;
      queue.push_back({r, c});
    }
  }
  for (std::size_t i = 0; i < reached.size(); ++i) {
    if (spec.free_[i] && !reached[i]) {
      throw ConfigError("maze cell (" + std::to_string(i / n) + ", " + std::to_string(i % n) +
                        ") cannot reach the exit");
    }
  }
  return spec;
}

MazeSpec MazeSpec::load(const std::filesystem::path& path, StartPolicy start, double loss_threshold) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open maze layout " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return parse(buf.str(), start, loss_threshold);
}

bool MazeSpec::is_free(int row, int col) const {
  if (row < 0 || col < 0 || row >= n_ || col >= n_) return false;
  return free_[static_cast<std::size_t>(row) * n_ + col];
}

std::vector<MazeCell> MazeSpec::free_cells() const {
  std::vector<MazeCell> out;
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) {
      if (is_free(r, c)) out.push_back({r, c});
    }
  }
  return out;
}

MazeState maze_start_at(const MazeSpec& spec, MazeCell cell) {
  if (!spec.is_free(cell.row, cell.col)) throw ConfigError("maze start cell is not free");
  MazeState s;
  s.agent = cell;
  s.visited.assign(static_cast<std::size_t>(spec.size()) * spec.size(), false);
  s.visited[static_cast<std::size_t>(cell.row) * spec.size() + cell.col] = true;
  return s;
}

MazeState maze_reset(const MazeSpec& spec, std::mt19937_64& rng) {
  if (spec.start_policy() == StartPolicy::kFixedTopLeft) return maze_start_at(spec, {0, 0});
  std::vector<MazeCell> cells = spec.free_cells();
  std::erase(cells, spec.exit());
  if (cells.empty()) throw ConfigError("maze has no free start cell besides the exit");
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  return maze_start_at(spec, cells[pick(rng)]);
}

MazeStepResult maze_step(const MazeSpec& spec, const MazeState& state, MazeAction action) {
  if (state.outcome != MazeOutcome::kContinue) throw SteppedAfterTerminal("maze episode already ended");
  const int a = static_cast<int>(action);
  if (a < 0 || a >= kMazeActionCount) throw IndexOutOfRange("maze action " + std::to_string(a));
  const int dr[] = {-1, 1, 0, 0};
  const int dc[] = {0, 0, 1, -1};

  MazeStepResult out{state, 0.0, MazeOutcome::kContinue};
  MazeState& s = out.state;
  const MazeCell target{state.agent.row + dr[a], state.agent.col + dc[a]};
  const auto& rw = spec.rewards();
  if (!spec.is_free(target.row, target.col)) {
    out.reward = rw.revisit;
  } else {
    s.agent = target;
    const std::size_t idx = static_cast<std::size_t>(target.row) * spec.size() + target.col;
    if (target == spec.exit()) {
      out.reward = rw.exit;
      out.outcome = MazeOutcome::kWin;
    } else if (s.visited[idx]) {
      out.reward = rw.revisit;
    } else {
      out.reward = rw.new_cell;
    }
    s.visited[idx] = true;
  }
  s.cumulative_reward += out.reward;
  if (out.outcome == MazeOutcome::kContinue && s.cumulative_reward < spec.loss_threshold()) {
    out.outcome = MazeOutcome::kLoss;
  }
  s.outcome = out.outcome;
  return out;
}

Eigen::VectorXd maze_render(const MazeSpec& spec, const MazeState& state) {
  const int n = spec.size();
  Eigen::VectorXd x(static_cast<Eigen::Index>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) x(static_cast<Eigen::Index>(r) * n + c) = spec.is_free(r, c) ? 1.0 : 0.0;
  }
  x(static_cast<Eigen::Index>(state.agent.row) * n + state.agent.col) = 0.5;
  return x;
}

}  // namespace kova

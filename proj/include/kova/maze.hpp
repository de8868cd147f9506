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


// Grid mazes with image-like state features.
//
// Cells are addressed (row, col) with (0, 0) at the top-left; the exit is the
// bottom-right cell. Actions: 0 up, 1 down, 2 right, 3 left.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kova {

enum class StartPolicy { kFixedTopLeft, kRandomFreeCell };

enum class MazeAction { kUp = 0, kDown = 1, kRight = 2, kLeft = 3 };
inline constexpr int kMazeActionCount = 4;

enum class MazeOutcome { kContinue, kWin, kLoss };

struct MazeRewards {
  double new_cell = -0.04;
  double revisit = -0.25;  // also charged for blocked or out-of-bounds moves
  double exit = 1.0;
};

struct MazeCell {
  int row = 0;
  int col = 0;
  friend bool operator==(const MazeCell&, const MazeCell&) = default;
};

class MazeSpec {
 public:
  /// Rows of '#' (blocked) and '.' (free). Throws ConfigError on a bad grid,
  /// a blocked start or exit, or a free cell that cannot reach the exit.
  static MazeSpec parse(const std::string& text, StartPolicy start = StartPolicy::kFixedTopLeft,
                        double loss_threshold = -50.0);
  static MazeSpec load(const std::filesystem::path& path, StartPolicy start = StartPolicy::kFixedTopLeft,
                       double loss_threshold = -50.0);

  int size() const { return n_; }
  bool is_free(int row, int col) const;
  MazeCell exit() const { return {n_ - 1, n_ - 1}; }
  StartPolicy start_policy() const { return start_; }
  double loss_threshold() const { return loss_threshold_; }
  const MazeRewards& rewards() const { return rewards_; }
  std::vector<MazeCell> free_cells() const;
  Eigen::Index feature_width() const { return static_cast<Eigen::Index>(n_) * n_; }

 private:
  MazeSpec() = default;

  int n_ = 0;
  std::vector<bool> free_;  // row-major
  StartPolicy start_ = StartPolicy::kFixedTopLeft;
  double loss_threshold_ = -50.0;
  MazeRewards rewards_;
};

struct MazeState {
  MazeCell agent;
  std::vector<bool> visited;  // row-major
  double cumulative_reward = 0.0;
  MazeOutcome outcome = MazeOutcome::kContinue;
};

struct MazeStepResult {
  MazeState state;
  double reward = 0.0;
  MazeOutcome outcome = MazeOutcome::kContinue;
};

/// Start a new episode using the layout's start policy. Random starts never pick
/// the exit.
MazeState maze_reset(const MazeSpec& spec, std::mt19937_64& rng);
MazeState maze_start_at(const MazeSpec& spec, MazeCell cell);

MazeStepResult maze_step(const MazeSpec& spec, const MazeState& state, MazeAction action);
inline MazeStepResult maze_step(const MazeSpec& spec, const MazeState& state, int action) {
  return maze_step(spec, state, static_cast<MazeAction>(action));
}

/// Free cells 1.0, blocked 0.0, agent 0.5, flattened row-major.
Eigen::VectorXd maze_render(const MazeSpec& spec, const MazeState& state);

}  // namespace kova

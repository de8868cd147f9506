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

// Binary filter checkpoints.
//
// All integers are unsigned little-endian, all reals IEEE-754 binary64
// little-endian. Layout, in order:
//
//   offset  size     field
//   0       8        magic "KOVACKPT"
//   8       4        u32 format version (= 1)
//   12      8        u64 d (parameter dimension)
//   20      8        u64 step
//   28      8        f64 learning rate α
//   36      8        f64 p0_scale
//   44      8        f64 covariance ceiling (0 = none)
//   52      4        u32 evolution kind (0 zero, 1 fixed diagonal, 2 fading memory)
//   56      8        f64 evolution value (σ_v² or η)
//   64      4        u32 observation kind (0 batch size, 1 fixed diagonal, 2 custom)
//   68      8        f64 observation variance
//   76      8        u64 w (custom weight count)
//   84      8·w      f64 custom weights
//   ...     8·d      f64 θ̂
//   ...     8·d·d    f64 P, row-major
//
// Reading validates the magic, version, enum ranges and exact file length.

#pragma once

#include <filesystem>
#include <string>

#include "kova/filter.hpp"

namespace kova {

struct Checkpoint {
  FilterState<double> state;
  KovaConfig config;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace kova

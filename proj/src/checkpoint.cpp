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

#include "kova/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace kova {
namespace {

constexpr char kMagic[8] = {'K', 'O', 'V', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  void expect_magic() {
    need(sizeof(kMagic));
    if (std::memcmp(bytes_.data() + pos_, kMagic, sizeof(kMagic)) != 0) {
      throw FormatError("checkpoint: bad magic");
    }
    pos_ += sizeof(kMagic);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto& s = ckpt.state;
  const Index d = s.dim();
  if (s.covariance.rows() != d || s.covariance.cols() != d) {
    throw ShapeMismatch("checkpoint: covariance does not match parameter dimension");
  }
  const auto& noise = ckpt.config.noise;
  std::string out;
  out.reserve(84 + 8 * (noise.observation.weights.size() + static_cast<std::size_t>(d + d * d)));
  out.append(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  put_le<std::uint64_t>(out, s.step);
  put_f64(out, ckpt.config.learning_rate);
  put_f64(out, ckpt.config.p0_scale);
  put_f64(out, ckpt.config.covariance_ceiling);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(noise.evolution.kind));
  put_f64(out, noise.evolution.value);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(noise.observation.kind));
  put_f64(out, noise.observation.variance);
  put_le<std::uint64_t>(out, noise.observation.weights.size());
  for (double w : noise.observation.weights) put_f64(out, w);
  for (Index i = 0; i < d; ++i) put_f64(out, s.theta(i));
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c < d; ++c) put_f64(out, s.covariance(r, c));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  in.expect_magic();
  const auto version = in.get_le<std::uint32_t>();
  if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  const auto d = in.get_le<std::uint64_t>();
  ckpt.state.step = in.get_le<std::uint64_t>();
  ckpt.config.learning_rate = in.get_f64();
  ckpt.config.p0_scale = in.get_f64();
  ckpt.config.covariance_ceiling = in.get_f64();
  const auto evo = in.get_le<std::uint32_t>();
  if (evo > 2) throw FormatError("checkpoint: bad evolution kind");
  ckpt.config.noise.evolution.kind = static_cast<EvolutionKind>(evo);
  ckpt.config.noise.evolution.value = in.get_f64();
  const auto obs = in.get_le<std::uint32_t>();
  if (obs > 2) throw FormatError("checkpoint: bad observation kind");
  ckpt.config.noise.observation.kind = static_cast<ObservationKind>(obs);
  ckpt.config.noise.observation.variance = in.get_f64();
  const auto w = in.get_le<std::uint64_t>();
  if (w > in.remaining() / 8) throw FormatError("checkpoint: truncated file");
  ckpt.config.noise.observation.weights.resize(w);
  for (auto& x : ckpt.config.noise.observation.weights) x = in.get_f64();

  if (d > (1ULL << 24) || in.remaining() != 8 * (d + d * d)) {
    throw FormatError("checkpoint: payload size does not match dimension " + std::to_string(d));
  }
  const auto di = static_cast<Index>(d);
  ckpt.state.theta.resize(di);
  for (Index i = 0; i < di; ++i) ckpt.state.theta(i) = in.get_f64();
  ckpt.state.covariance.resize(di, di);
  for (Index r = 0; r < di; ++r) {
    for (Index c = 0; c < di; ++c) ckpt.state.covariance(r, c) = in.get_f64();
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace kova

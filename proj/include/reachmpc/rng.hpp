// Copyright 2026 The reachmpc Authors
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

#ifndef REACHMPC_RNG_HPP_
#define REACHMPC_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace reachmpc {

/// Counter-based deterministic generator (SplitMix64 applied to an
/// incrementing counter). Streams are fully determined by the seed, so
/// trials can be replayed bit-exactly on any platform. No global state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : counter_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (counter_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  /// Independent child stream, e.g. one per trial index.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    CounterRng r(seed ^ (0xd1b54a32d192ed03ULL * (index + 1)));
    return r.next_u64();
  }

 private:
  std::uint64_t counter_;
};

}  // namespace reachmpc

#endif  // REACHMPC_RNG_HPP_

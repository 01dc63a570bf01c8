/* Copyright 2026 The LSRec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lsrec {

namespace detail {
inline void append_all(std::ostringstream&) {}
template <typename A, typename... Rest>
void append_all(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  append_all(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string str_cat(const Args&... args) {
  std::ostringstream os;
  detail::append_all(os, args...);
  return os.str();
}

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

#define LSREC_CHECK(cond, ...)                   \
  do {                                           \
    if (!(cond)) {                               \
      ::lsrec::fail(::lsrec::str_cat(__VA_ARGS__)); \
    }                                            \
  } while (0)

// SplitMix64: stateless 64-bit mixer used wherever we need a reproducible
// stream keyed by (seed, index) instead of a mutable RNG object. Keyed
// draws are order-independent, so parallel loops stay deterministic.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

// Uniform in [0, 1) from a keyed draw.
inline double keyed_uniform(uint64_t seed, uint64_t key) {
  return static_cast<double>(splitmix64(seed ^ splitmix64(key)) >> 11) *
         0x1.0p-53;
}

// FNV-1a, used for vocabulary fingerprints in corpus/checkpoint files.
inline uint64_t fnv1a_init() { return 0xcbf29ce484222325ULL; }
inline uint64_t fnv1a_update(uint64_t h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lsrec

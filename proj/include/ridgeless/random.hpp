#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace ridgeless {

/// SplitMix64 finalizer. Used only to derive well-separated seeds, never as the
/// sampling engine itself.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a path of integer keys
/// (replicate index, purpose tag, ...). The same path always yields the same
/// seed, and distinct paths yield unrelated streams, so replicates can be
/// generated in any order or on any thread.
inline std::uint64_t substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = mix64(seed);
  for (auto k : path) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
  return s;
}

/// Purpose tags for substreams so that different random objects drawn for the
/// same replicate never share a stream.
enum class StreamTag : std::uint64_t {
  Training = 1,
  RandomColumns = 2,
  RandomRows = 3,
  TestTail = 4,
  Folds = 5,
  RffMatrix = 6,
  ImageDraw = 7,
};

inline std::uint64_t substream(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept {
  return substream(seed, {static_cast<std::uint64_t>(tag), index});
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

/// Matrix of i.i.d. N(0, sd^2) entries, drawn in row-major order.
inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, Engine& eng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sd * dist(eng);
  return m;
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, double sd, Engine& eng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = sd * dist(eng);
  return v;
}

}  // namespace ridgeless

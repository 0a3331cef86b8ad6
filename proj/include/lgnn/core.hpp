#pragma once

// Shared value types and error hierarchy for the lgnn library.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace lgnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad shapes, out-of-range indices, unknown keys.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf showed up where a finite number was required.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long index = -1)
      : Error(what), index_(index) {}
  /// Position of the first offending entry (step, sample or coordinate), -1 if n/a.
  long index() const { return index_; }

 private:
  long index_;
};

/// Linear solve could not be completed (singular constraint system).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Training diverged.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// Dataset generation failed for a particular trajectory.
class DatasetError : public Error {
 public:
  DatasetError(const std::string& what, std::uint64_t seed) : Error(what), seed_(seed) {}
  std::uint64_t trajectory_seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Positions and velocities of every particle at one instant.
///
/// Both vectors are particle-major: [x0, y0, x1, y1, ...].
struct State {
  Vec q;
  Vec qdot;
  double t = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(q.size()); }
};

inline void validate_state(const State& s, std::size_t expected_size) {
  if (s.q.size() != s.qdot.size())
    throw ValidationError("state: q and qdot lengths differ (" + std::to_string(s.q.size()) +
                          " vs " + std::to_string(s.qdot.size()) + ")");
  if (static_cast<std::size_t>(s.q.size()) != expected_size)
    throw ValidationError("state: expected " + std::to_string(expected_size) +
                          " coordinates, got " + std::to_string(s.q.size()));
}

/// Index of the first non-finite entry, or -1.
inline long first_non_finite(std::span<const double> xs) {
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i])) return static_cast<long>(i);
  return -1;
}

inline long first_non_finite(const Vec& v) {
  return first_non_finite(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

inline long first_non_finite(const Mat& m) {
  return first_non_finite(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

inline void require_finite(const Vec& v, const std::string& what) {
  if (long i = first_non_finite(v); i >= 0)
    throw NumericError(what + ": non-finite value at index " + std::to_string(i), i);
}

inline void require_finite(const Mat& m, const std::string& what) {
  if (long i = first_non_finite(m); i >= 0)
    throw NumericError(what + ": non-finite value at flat index " + std::to_string(i), i);
}

inline void require_finite(const State& s, const std::string& what) {
  require_finite(s.q, what + " (q)");
  require_finite(s.qdot, what + " (qdot)");
}

}  // namespace lgnn

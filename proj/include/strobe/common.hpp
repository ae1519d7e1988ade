#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace strobe {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Small state vector (D <= 2) that never touches the heap.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

// Error hierarchy. Each maps onto one failure category of the public API.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateMap : public Error {
 public:
  using Error::Error;
};

class DryState : public Error {
 public:
  using Error::Error;
};

class UndefinedRatio : public Error {
 public:
  using Error::Error;
};

class IllPosedData : public Error {
 public:
  using Error::Error;
};

class NotInfSupStable : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver gave up; carries the last iterate.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, Eigen::VectorXd last) : Error(what), last_iterate(std::move(last)) {}
  Eigen::VectorXd last_iterate;
};

/// Number of worker threads, from STROBE_THREADS (default: hardware concurrency).
int worker_count();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
/// so writing into slot i of a preallocated container is deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace strobe

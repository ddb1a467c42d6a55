#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdq {

// Shape disagreement between tensors or between a tensor and a graph.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument value: out-of-range quantile, empty input, infeasible
// generator parameters, invalid hyperparameters.
struct ValueError : std::runtime_error {
  explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IndexError : std::runtime_error {
  explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotFoundError : std::runtime_error {
  explicit NotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed binary container; carries the byte offset of the failure.
struct FormatError : std::runtime_error {
  std::size_t offset;
  FormatError(const std::string& msg, std::size_t offset_)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset_) + ")"),
        offset(offset_) {}
};

// Training produced a non-finite loss; names the offending epoch.
struct DivergenceError : std::runtime_error {
  std::size_t epoch;
  explicit DivergenceError(std::size_t epoch_)
      : std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch_)),
        epoch(epoch_) {}
};

// Invalid run configuration; message names the offending field.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fdq

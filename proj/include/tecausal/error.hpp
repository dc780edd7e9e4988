#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tecausal {

enum class ErrorKind {
  config,           // invalid parameters or schema violations
  data,             // malformed, missing or non-finite input
  identifiability,  // insufficient heterogeneity / rank deficiency
  acyclicity,       // adjacency support contains a cycle
  conditioning,     // numerically singular input where a ridge is needed
  internal          // violated invariant that valid input cannot produce
};

std::string_view to_string(ErrorKind kind) noexcept;

// Process exit code used by the command-line front end.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what) : Error(ErrorKind::conditioning, what) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(ErrorKind::internal, what) {}
};

class IdentifiabilityError : public Error {
 public:
  IdentifiabilityError(const std::string& what, std::size_t rank, std::size_t dim)
      : Error(ErrorKind::identifiability, what), rank_(rank), dim_(dim) {}
  std::size_t rank() const noexcept { return rank_; }
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t rank_;
  std::size_t dim_;
};

class AcyclicityError : public Error {
 public:
  explicit AcyclicityError(std::vector<std::size_t> cycle);
  // Vertices of one directed cycle, in traversal order.
  const std::vector<std::size_t>& cycle() const noexcept { return cycle_; }

 private:
  std::vector<std::size_t> cycle_;
};

}  // namespace tecausal

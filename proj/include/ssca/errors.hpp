#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssca {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dimension mismatch between vectors, matrices or message payloads.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a round cannot complete; no partial aggregation is applied.
class RoundAbort : public ProtocolError {
 public:
  RoundAbort(const std::string& what, unsigned round)
      : ProtocolError(what), round_(round) {}
  unsigned round() const noexcept { return round_; }

 private:
  unsigned round_;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, const std::string& file, std::size_t offset)
      : std::runtime_error(file + ": " + what + " at offset " + std::to_string(offset)),
        file_(file),
        offset_(offset) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::size_t offset_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssca

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ds {

/// Precondition failure (dimension mismatch, invalid argument values).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// An operation was asked to reduce over zero valid pixels.
class EmptyDomainError : public std::runtime_error {
 public:
  explicit EmptyDomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Input data violates a documented invariant (NaN depth, front/back order, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file content. `offset` is the byte position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Normals too close to the view plane for gradient-field conversion.
/// Carries the offending pixel coordinates as (u, v) pairs.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, std::vector<std::pair<int, int>> pixels)
      : std::runtime_error(what), pixels_(std::move(pixels)) {}

  const std::vector<std::pair<int, int>>& pixels() const { return pixels_; }

 private:
  std::vector<std::pair<int, int>> pixels_;
};

}  // namespace ds

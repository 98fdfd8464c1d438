#pragma once

#include <stdexcept>
#include <string>

namespace purephase {

/// Input outside the domain of a formula; the message names the parameter.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error{what} {}
};

/// Lens layout that cannot produce the requested plane.
class DesignError : public std::invalid_argument {
 public:
  explicit DesignError(const std::string& what) : std::invalid_argument{what} {}
};

/// Grid too coarse or too small for the field it must hold.
class SamplingError : public std::runtime_error {
 public:
  explicit SamplingError(const std::string& what) : std::runtime_error{what} {}
};

/// Least-squares fit failed or the data carries no usable peak.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error{what} {}
};

/// Malformed file or config content.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error{what} {}
};

}  // namespace purephase

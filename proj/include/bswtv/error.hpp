#pragma once

#include <stdexcept>
#include <string>

namespace bswtv {

// Precondition violated by the caller (bad shape, bad parameter, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent run configuration / manifest.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// A fidelity evaluation left the region where alpha*Az + sigma^2 > 0.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative solver broke down (e.g. nonpositive curvature in CG).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read, written or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bswtv

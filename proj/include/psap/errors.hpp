#pragma once

#include <stdexcept>
#include <string>

namespace psap {

// Malformed or inconsistent input files, bad configuration.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments outside an analytic formula's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace psap

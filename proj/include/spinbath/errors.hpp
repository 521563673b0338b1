#pragma once

#include <stdexcept>
#include <string>

namespace spinbath {

// Thrown when a computation leaves its numerical contract (positivity loss,
// step budget exhaustion, non-finite values). Input/contract violations use
// std::invalid_argument instead; the CLI maps the two to distinct exit codes.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spinbath

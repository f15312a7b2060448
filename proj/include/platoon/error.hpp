#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace platoon {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a vehicle state or input carries NaN/Inf.
class InvalidState : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Collects every violated constraint of a configuration so they can be
// reported together instead of one at a time.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, std::size_t vehicle, double t)
      : std::runtime_error("non-finite state at step " + std::to_string(step) +
                           " (t=" + std::to_string(t) + " s) for vehicle " +
                           std::to_string(vehicle)),
        step_(step),
        vehicle_(vehicle) {}

  std::size_t step() const noexcept { return step_; }
  std::size_t vehicle() const noexcept { return vehicle_; }

 private:
  std::size_t step_;
  std::size_t vehicle_;
};

}  // namespace platoon

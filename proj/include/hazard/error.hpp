#pragma once

#include <stdexcept>
#include <string>

namespace hazard {

// Bad user input: malformed CSV, unknown model name, invalid CLI values.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure that survived all recovery attempts (step halving,
// ridge escalation). Carries enough text to identify the model and stage.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal contract violation; indicates a bug, not bad data.
class internal_error : public std::logic_error {
 public:
  explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace hazard

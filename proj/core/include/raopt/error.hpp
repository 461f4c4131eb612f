#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace raopt {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorCategory {
  kInfeasible = 2,
  kNonConvergence = 3,
  kIo = 4,
  kValidation = 5,
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace raopt

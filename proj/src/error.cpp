#include "checkerboard/error.hpp"

namespace checkerboard {

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Argument: return 2;
    case ErrorCategory::Config: return 3;
    case ErrorCategory::Io: return 4;
    case ErrorCategory::Numeric: return 5;
    case ErrorCategory::Format: return 6;
  }
  return 1;
}

}  // namespace checkerboard

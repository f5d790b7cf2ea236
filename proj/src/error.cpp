#include "trustmon/error.hpp"

namespace trustmon {

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return 2;
    case ErrorCategory::kDetector:
      return 3;
    case ErrorCategory::kIo:
      return 4;
  }
  return 1;
}

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kDetector:
      return "detector";
    case ErrorCategory::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace trustmon

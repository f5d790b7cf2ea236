#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trustmon {

// Coarse error classes; the CLI maps them onto process exit codes.
enum class ErrorCategory {
  kConfig,    // exit 2: malformed inputs, configs, manifests, model files
  kDetector,  // exit 3: analysis/inference failures and unmet phase preconditions
  kIo,        // exit 4: filesystem failures
};

int exit_code(ErrorCategory category);
std::string_view category_name(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define TRUSTMON_DEFINE_ERROR(Name, Category)                       \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what)                          \
        : Error(ErrorCategory::Category, #Name ": " + what) {}      \
  }

// model
TRUSTMON_DEFINE_ERROR(ParseError, kConfig);
TRUSTMON_DEFINE_ERROR(NonFiniteWeight, kConfig);
TRUSTMON_DEFINE_ERROR(UnsupportedLayer, kConfig);
TRUSTMON_DEFINE_ERROR(DimensionError, kDetector);

// datasets
TRUSTMON_DEFINE_ERROR(MissingColumn, kConfig);
TRUSTMON_DEFINE_ERROR(EmptyClass, kConfig);
TRUSTMON_DEFINE_ERROR(NonNumericValue, kConfig);
TRUSTMON_DEFINE_ERROR(TooFewRows, kConfig);
TRUSTMON_DEFINE_ERROR(ManifestError, kConfig);

// detectors
TRUSTMON_DEFINE_ERROR(DegenerateData, kDetector);
TRUSTMON_DEFINE_ERROR(NoUsableLayers, kDetector);
TRUSTMON_DEFINE_ERROR(UnsupportedActivation, kDetector);
TRUSTMON_DEFINE_ERROR(AnchorOutOfRange, kDetector);
TRUSTMON_DEFINE_ERROR(EmptyTrainingSet, kDetector);

// metrics
TRUSTMON_DEFINE_ERROR(LengthMismatch, kDetector);
TRUSTMON_DEFINE_ERROR(EmptyMatrix, kDetector);

// harness
TRUSTMON_DEFINE_ERROR(ConfigError, kConfig);
TRUSTMON_DEFINE_ERROR(MissingOutputs, kDetector);
TRUSTMON_DEFINE_ERROR(IoError, kIo);

#undef TRUSTMON_DEFINE_ERROR

// Dimension mismatch between consecutive layers; carries the offending layer.
class ShapeError : public Error {
 public:
  ShapeError(std::size_t layer, const std::string& what)
      : Error(ErrorCategory::kConfig,
              "ShapeError(layer=" + std::to_string(layer) + "): " + what),
        layer_(layer) {}

  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

}  // namespace trustmon

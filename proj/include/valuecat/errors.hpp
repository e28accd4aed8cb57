#ifndef VALUECAT_ERRORS_HPP
#define VALUECAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace valuecat {

// Error taxonomy mirrored by the CLI exit codes:
//   config -> 2, data/format/integrity/size -> 3, training -> 4, registry -> 5.

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct SizeError : std::runtime_error {
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

struct RegistryError : std::runtime_error {
  explicit RegistryError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace valuecat

#endif

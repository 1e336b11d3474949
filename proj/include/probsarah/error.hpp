#pragma once

#include <stdexcept>
#include <string>

namespace probsarah {

// Invalid or inadmissible configuration (bad hyperparameters, infeasible
// settings, unknown keys).  CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (dataset files, config files).  Messages carry the
// offending location.  CLI maps this to exit code 1.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace probsarah

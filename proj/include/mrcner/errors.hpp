#pragma once

#include <stdexcept>
#include <string>

namespace mrcner {

// Bad inputs caught up front: malformed files, invalid config, broken
// contracts. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures while a run is underway: I/O errors mid-stream, non-finite
// loss. The CLI maps these to exit code 2.
class ExecError : public std::runtime_error {
 public:
  explicit ExecError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mrcner

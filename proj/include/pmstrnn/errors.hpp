// errors.hpp
// error types and process exit codes shared by the library and the CLI

#pragma once

#include <stdexcept>
#include <string>

namespace pmstrnn {

// invalid architecture, shapes, option values, unknown config keys
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

// missing or unreadable files
struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

// bad magic, version mismatch, CRC failure, truncation
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& m) : std::runtime_error(m) {}
};

// non-finite values during rollout or optimization
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

namespace exit_code {
constexpr int ok = 0;
constexpr int failure = 1;   // generic failure (also: gradcheck above tolerance)
constexpr int bad_args = 2;
constexpr int config = 3;
constexpr int io = 4;
constexpr int format = 5;
constexpr int numeric = 6;
}  // namespace exit_code

}  // namespace pmstrnn

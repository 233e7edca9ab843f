#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdgate {

/// Error category; the CLI maps each kind to its exit status.
enum class ErrorKind {
  Input,   ///< malformed or inconsistent input data (exit 2)
  Config,  ///< invalid configuration or flags (exit 3)
  Stage,   ///< a pipeline stage could not complete (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string stage, const std::string& message)
      : std::runtime_error(stage.empty() ? message : stage + ": " + message),
        kind_(kind),
        stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

class InputError : public Error {
 public:
  InputError(std::string stage, const std::string& message)
      : Error(ErrorKind::Input, std::move(stage), message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::Config, "config", message) {}
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(ErrorKind::Stage, std::move(stage), message) {}
};

/// A record-level parse failure. `record` is the 0-based index of the
/// offending record (absent for header/container-level failures) and
/// `line` the 1-based physical line, when the format is line oriented.
class ParseError : public InputError {
 public:
  ParseError(std::string stage, std::optional<std::size_t> record,
             std::optional<std::size_t> line, const std::string& message)
      : InputError(std::move(stage), describe(record, line) + message),
        record_(record),
        line_(line) {}

  std::optional<std::size_t> record() const noexcept { return record_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string describe(std::optional<std::size_t> record,
                              std::optional<std::size_t> line) {
    std::string out;
    if (record) out = "record " + std::to_string(*record);
    if (line) out += out.empty() ? "line " + std::to_string(*line) : " (line " + std::to_string(*line) + ")";
    return out.empty() ? out : out + ": ";
  }

  std::optional<std::size_t> record_;
  std::optional<std::size_t> line_;
};

/// Raised when frames above the count ceiling have no density estimate.
class MissingDensityError : public StageError {
 public:
  explicit MissingDensityError(std::vector<std::uint64_t> frames);

  const std::vector<std::uint64_t>& frames() const noexcept { return frames_; }

 private:
  std::vector<std::uint64_t> frames_;
};

}  // namespace crowdgate

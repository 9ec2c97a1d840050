#pragma once

#include <stdexcept>
#include <string>

namespace pjx {

// Shapes of operands do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller violated a documented precondition (non-scalar loss, unnormalized
// distribution, mismatched lengths, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A numeric parameter is outside its admissible range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad user-supplied input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record in a data file; carries the offending field and line.
class ParseError : public InputError {
 public:
  ParseError(std::string field, std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": field \"" + field + "\": " + what),
        field_(std::move(field)),
        line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

// Invalid configuration key or value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Training produced a non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint file is unreadable, has the wrong version, or does not match the model.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pjx

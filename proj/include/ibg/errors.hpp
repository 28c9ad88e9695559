#pragma once

#include <stdexcept>
#include <string>

namespace ibg {

// Error categories. Each maps to a distinct C-API status and CLI exit code.
enum class ErrorKind {
  dimension,   // tensor/matrix shape mismatch
  index,       // out-of-range id or label
  contract,    // precondition violated (empty aspect mask, non-scalar root, ...)
  config,      // inconsistent or unsatisfiable configuration
  capability,  // operation not supported by this model variant
  format,      // checkpoint/file envelope problems
  parse,       // malformed JSON / CSV input
  validation,  // record violates a domain invariant
  io,          // missing file, unreadable path
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error(ErrorKind::dimension, w) {}
};
struct IndexError : Error {
  explicit IndexError(const std::string& w) : Error(ErrorKind::index, w) {}
};
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error(ErrorKind::contract, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct CapabilityError : Error {
  explicit CapabilityError(const std::string& w) : Error(ErrorKind::capability, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::parse, w) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

const char* error_kind_name(ErrorKind kind);

}  // namespace ibg

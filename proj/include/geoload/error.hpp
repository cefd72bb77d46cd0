#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geoload {

enum class ErrorKind {
  config,         // bad flags / configuration values
  validation,     // data violates a domain invariant
  parse,          // malformed input file
  gap,            // missing timestamps
  reference,      // unknown id referenced
  compatibility,  // model and data disagree on schema
  domain,         // argument outside a function's domain
  shape,          // dimension mismatch
  numeric,        // non-finite values
  solver,         // singular / rank-deficient system
  io,             // filesystem failures
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Process exit code for an error: 2 for config/validation-type failures,
/// 1 for runtime and numeric failures.
int exit_code(ErrorKind kind);

}  // namespace geoload

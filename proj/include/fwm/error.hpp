#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fwm {

enum class ErrorKind {
  validation,
  lookup,
  configuration,
  resolution,
  consistency,
  ill_conditioned,
  degenerate,
  unavailable,
  linking,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Warnings go to stderr; tests silence them.
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace fwm

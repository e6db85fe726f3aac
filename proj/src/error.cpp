#include "fwm/error.hpp"

#include <atomic>
#include <iostream>

namespace fwm {

namespace {
std::atomic<bool> g_warnings{true};
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::ill_conditioned: return "ill-conditioned";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::unavailable: return "unavailable";
    case ErrorKind::linking: return "linking";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void warn(const std::string& message) {
  if (g_warnings.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

}  // namespace fwm

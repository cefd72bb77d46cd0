#include "geoload/error.hpp"

namespace geoload {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::gap: return "gap";
    case ErrorKind::reference: return "reference";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::domain: return "domain";
    case ErrorKind::shape: return "shape";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::solver: return "solver";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::gap:
    case ErrorKind::reference:
    case ErrorKind::compatibility:
    case ErrorKind::domain:
      return 2;
    default:
      return 1;
  }
}

}  // namespace geoload

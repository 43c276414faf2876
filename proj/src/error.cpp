#include "rigidlab/error.hpp"

namespace rigidlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain_error";
    case ErrorKind::precondition: return "precondition_error";
    case ErrorKind::tolerance: return "tolerance_error";
    case ErrorKind::divergence: return "divergence_error";
    case ErrorKind::degenerate_fit: return "degenerate_fit_error";
    case ErrorKind::io: return "io_error";
  }
  return "error";
}

}  // namespace rigidlab

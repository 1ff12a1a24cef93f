#include "spectral_edge/errors.hpp"

#include <sstream>

namespace spectral_edge {

namespace {
std::string with_residual(const std::string& what, double residual) {
  std::ostringstream os;
  os << what << " (last residual " << residual << ")";
  return os.str();
}
}  // namespace

SolverError::SolverError(const std::string& what, double last_residual)
    : Error(with_residual(what, last_residual)), last_residual_(last_residual) {}

}  // namespace spectral_edge

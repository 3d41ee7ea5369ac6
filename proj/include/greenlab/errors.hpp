#pragma once

#include <stdexcept>
#include <string>

namespace greenlab {

// Error taxonomy shared by all modules.  Precondition errors signal bad
// inputs or out-of-scope parameters (CLI exit code 2); contract errors
// signal a broken guarantee detected at runtime (CLI exit code 1).
class Error : public std::runtime_error {
public:
  enum class Kind { precondition, contract };

  Error(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

#define GREENLAB_ERROR(Name, Which)                       \
  class Name : public Error {                             \
  public:                                                 \
    explicit Name(const std::string& what)                \
        : Error(Error::Kind::Which, std::string(#Name ": ") + what) {} \
  };

GREENLAB_ERROR(InvalidDomain, precondition)
GREENLAB_ERROR(InvalidParameter, precondition)
GREENLAB_ERROR(OutOfScale, precondition)
GREENLAB_ERROR(TooClose, precondition)
GREENLAB_ERROR(ResolutionError, precondition)
GREENLAB_ERROR(InvalidPairing, precondition)
GREENLAB_ERROR(CompatibilityError, precondition)
GREENLAB_ERROR(FlatnessViolation, contract)
GREENLAB_ERROR(GeometryContractViolation, contract)
GREENLAB_ERROR(MeshFailure, contract)
GREENLAB_ERROR(SolveFailure, contract)
GREENLAB_ERROR(FitError, contract)

#undef GREENLAB_ERROR

}  // namespace greenlab

#ifndef RELERR_ERRORS_HPP
#define RELERR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace relerr {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (eps <= 0, y <= 0, ...).
struct DomainError : Error {
  using Error::Error;
};

// A computation produced or encountered NaN / +-inf where a finite value is required.
struct NonFiniteError : Error {
  using Error::Error;
};

// Adaptive quadrature exhausted its refinement budget above tolerance.
struct QuadratureError : Error {
  using Error::Error;
};

// A linear predictor or exponent left the representable log-domain.
struct OverflowError : Error {
  using Error::Error;
};

struct DimensionError : Error {
  using Error::Error;
};

// Matrix inversion refused: condition number beyond the supported range.
struct SingularMatrixError : Error {
  using Error::Error;
};

// Invalid values in user-supplied data; message names the offending row/index.
struct DataError : Error {
  using Error::Error;
};

// Missing or mismatched column in a CSV / model file.
struct SchemaError : Error {
  using Error::Error;
};

struct FileError : Error {
  using Error::Error;
};

// Invalid Monte Carlo scenario description.
struct ScenarioError : Error {
  using Error::Error;
};

// A rolling evaluation window does not have enough rows.
struct InsufficientDataError : Error {
  using Error::Error;
};

// No noise sampler could be constructed for a loss family.
struct UnsupportedFamilyError : Error {
  using Error::Error;
};

}  // namespace relerr

#endif  // RELERR_ERRORS_HPP

#pragma once

#include <stdexcept>
#include <string>

namespace sml {

/// Base class for every recoverable failure raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The Mercer series needs more terms than the configured cap allows.
struct TruncationBudgetExceeded : Error {
  using Error::Error;
};

/// A dense eigendecomposition failed or missed its residual certificate.
struct EigensolverFailure : Error {
  using Error::Error;
};

/// A spectral gap needed by a subspace bound is below the usable threshold.
struct GapTooSmall : Error {
  using Error::Error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

/// Rate fit on abscissae that are all equal.
struct DegenerateFit : Error {
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sml

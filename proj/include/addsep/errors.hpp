#pragma once

#include <stdexcept>
#include <string>

namespace addsep {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct SameVariable : Error { using Error::Error; };
struct TapeMismatch : Error { using Error::Error; };
struct UnsupportedActivation : Error { using Error::Error; };

struct ZeroStep : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };
struct AllSamplesDegenerate : Error { using Error::Error; };

struct EmptySplit : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };

struct NonFinite : Error { using Error::Error; };
struct UnsatisfiableBalance : Error { using Error::Error; };

struct NoNegatives : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct MissingModel : Error { using Error::Error; };
struct IncompleteRun : Error { using Error::Error; };

}  // namespace addsep

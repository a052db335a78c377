#pragma once

#include <stdexcept>
#include <string>

namespace dnss {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- numerical kernel ---
struct NotHermitian : Error { using Error::Error; };
struct NotUnitary : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };
struct BadTrace : Error { using Error::Error; };

// --- physical parameters ---
struct InvalidParams : Error { using Error::Error; };
struct UnknownSpecies : Error { using Error::Error; };

// --- sequence language ---
struct UnboundParameter : Error { using Error::Error; };
struct NegativeDuration : Error { using Error::Error; };
struct InvalidPreset : Error { using Error::Error; };

// --- spectral analysis ---
struct OutOfRegime : Error { using Error::Error; };
struct BranchTrackingLost : Error { using Error::Error; };

// --- configuration / IO ---
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Parse error with source location (1-based line and column).
struct SyntaxError : Error {
  int line;
  int col;
  SyntaxError(int line_, int col_, const std::string& msg)
      : Error("line " + std::to_string(line_) + ", col " + std::to_string(col_) +
              ": " + msg),
        line(line_),
        col(col_) {}
};

}  // namespace dnss

#pragma once

#include <stdexcept>
#include <string>

namespace cfish {

// Base of every error the library raises on bad input or a failed pipeline
// stage. Subclasses map onto the CLI exit codes (1, 2, 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing files, malformed records, bad configuration values.
class InputError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage produced nothing to work with: no bigrams above the
// threshold, an empty graph, a matrix trimmed to nothing.
class EmptyStageError : public Error {
 public:
  using Error::Error;
};

// The Poisson model could not be estimated on the given data.
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfish

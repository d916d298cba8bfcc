#pragma once

#include <stdexcept>

namespace dephaselab {

struct NonHermitianInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotPositiveSemidefinite : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct AsymmetricInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidTime : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct StepTooLarge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Integration produced a state whose smallest eigenvalue fell below the
// admissible round-off band.
struct PositivityLost : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonRealCorrelation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NegativeRadicand : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedVariant : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnknownFigure : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dephaselab

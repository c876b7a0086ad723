#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prunemip {

enum class ErrorKind {
  InvalidInput,
  InvalidDomain,
  Parse,
  Schema,
  Validation,
  InvalidNetwork,
  NothingToPrune,
  LayerCollapse,
  TrainingDiverged,
  NotPurePruning,
  Encoding,
  Io,
};

std::string_view toString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by trainToConvergence when the loss becomes non-finite.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int last_finite_epoch, const std::string& message)
      : Error(ErrorKind::TrainingDiverged, message), last_finite_epoch_(last_finite_epoch) {}

  int lastFiniteEpoch() const noexcept { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

}  // namespace prunemip

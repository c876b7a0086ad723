#include "prunemip/error.hpp"

namespace prunemip {

std::string_view toString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::InvalidDomain: return "invalid domain";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::InvalidNetwork: return "invalid network";
    case ErrorKind::NothingToPrune: return "nothing to prune";
    case ErrorKind::LayerCollapse: return "layer collapse";
    case ErrorKind::TrainingDiverged: return "training diverged";
    case ErrorKind::NotPurePruning: return "not a pure pruning";
    case ErrorKind::Encoding: return "encoding error";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(toString(kind)) + ": " + message), kind_(kind) {}

}  // namespace prunemip

#include "ptlab/error.hpp"

namespace ptlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kNumericOverflow: return "numeric overflow";
    case ErrorKind::kSingularDesign: return "singular design";
    case ErrorKind::kSingularInformation: return "singular information";
    case ErrorKind::kRankDeficient: return "rank deficient";
    case ErrorKind::kIo: return "i/o error";
  }
  return "unknown error";
}

void raise(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace ptlab

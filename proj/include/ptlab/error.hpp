#pragma once

#include <stdexcept>
#include <string>

namespace ptlab {

enum class ErrorKind {
  kDimensionMismatch,
  kInvalidInput,
  kDomain,
  kNumericOverflow,
  kSingularDesign,
  kSingularInformation,
  kRankDeficient,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a stable exit status.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by the numbers rather than by the inputs.
  bool is_numerical() const noexcept {
    return kind_ == ErrorKind::kNumericOverflow || kind_ == ErrorKind::kSingularDesign ||
           kind_ == ErrorKind::kSingularInformation || kind_ == ErrorKind::kRankDeficient;
  }

private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace ptlab

#pragma once

#include <stdexcept>
#include <string>

namespace stftpr {

enum class Errc {
  kDimension,
  kInvalidArgument,
  kInsufficientMeasurements,
  kUndefinedReference,
  kConvergence,
  kNonCompletable,
  kInconsistent,
  kDegreeCap,
  kVanishingSignal,
  kUncoveredSample,
  kUnderDetermined,
  kPrecondition,
  kCertificateInvalid,
  kDegenerateInstance,
  kUnsupportedInstance,
  kConfig,
  kIo,
};

const char* to_string(Errc code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace stftpr

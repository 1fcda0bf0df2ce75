#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace instrec {

/// Every failure the library reports carries one of these codes so callers
/// (tests, the CLI exit-code mapping) can branch without parsing messages.
enum class ErrorCode {
  // audio_io
  MalformedHeader,
  UnsupportedEncoding,
  UnsupportedFormat,
  UnsupportedChannelCount,
  TruncatedData,
  EmptySignal,
  SampleOutOfRange,
  // spectral
  InvalidLength,
  InvalidFramePlan,
  SignalTooShort,
  NonPowerOfTwoLength,
  // features
  NegativeFrequency,
  NegativeMel,
  TooManyFilters,
  DimensionMismatch,
  FrameTooShort,
  LengthMismatch,
  InvalidFraction,
  InvalidConfig,
  // dataset
  MissingClassDir,
  EmptyClassDir,
  DegenerateSplit,
  TooManyFolds,
  EmptyInput,
  SchemaMismatch,
  InvalidDataset,
  // learn
  SingleClassInput,
  NonFiniteFeature,
  NonFiniteInput,
  InvalidHyperparameter,
  IoFailure,
  SchemaVersionMismatch,
  CorruptModel,
  // cluster
  KTooLarge,
  InvalidClusterCount,
  // eval
  LabelOutOfRange,
  EmptyMatrix,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace instrec

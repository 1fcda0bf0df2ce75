#include "instrec/error.hpp"

namespace instrec {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::UnsupportedChannelCount: return "UnsupportedChannelCount";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::SampleOutOfRange: return "SampleOutOfRange";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::InvalidFramePlan: return "InvalidFramePlan";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::NonPowerOfTwoLength: return "NonPowerOfTwoLength";
    case ErrorCode::NegativeFrequency: return "NegativeFrequency";
    case ErrorCode::NegativeMel: return "NegativeMel";
    case ErrorCode::TooManyFilters: return "TooManyFilters";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FrameTooShort: return "FrameTooShort";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingClassDir: return "MissingClassDir";
    case ErrorCode::EmptyClassDir: return "EmptyClassDir";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::TooManyFolds: return "TooManyFolds";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidClusterCount: return "InvalidClusterCount";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
  }
  return "Unknown";
}

}  // namespace instrec

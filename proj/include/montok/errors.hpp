#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace montok {

// Common base so callers can catch every library failure in one place.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define MONTOK_DEFINE_ERROR(NAME)     \
  struct NAME : Error {               \
    using Error::Error;               \
  }

MONTOK_DEFINE_ERROR(MissingFile);
MONTOK_DEFINE_ERROR(BadLanguageTag);
MONTOK_DEFINE_ERROR(EmptyCorpus);
MONTOK_DEFINE_ERROR(ZeroReference);
MONTOK_DEFINE_ERROR(VocabTooSmall);
MONTOK_DEFINE_ERROR(UnknownTokenId);
MONTOK_DEFINE_ERROR(IoError);
MONTOK_DEFINE_ERROR(MalformedModelFile);
MONTOK_DEFINE_ERROR(TransitionTooSmall);
MONTOK_DEFINE_ERROR(TooFewPoints);
MONTOK_DEFINE_ERROR(MissingEndpoints);
MONTOK_DEFINE_ERROR(MissingMeasurement);
MONTOK_DEFINE_ERROR(DomainError);
MONTOK_DEFINE_ERROR(ConstantPredictor);
MONTOK_DEFINE_ERROR(LengthMismatch);
MONTOK_DEFINE_ERROR(ZeroVariance);
MONTOK_DEFINE_ERROR(EmptyGroup);
MONTOK_DEFINE_ERROR(ManifestError);
MONTOK_DEFINE_ERROR(MissingStage);
MONTOK_DEFINE_ERROR(EmptyVocab);

#undef MONTOK_DEFINE_ERROR

// Carries the offending file and byte offset of the first bad sequence.
struct InvalidUtf8 : Error {
  InvalidUtf8(std::string file_in, std::size_t offset_in)
      : Error("invalid UTF-8 in '" + file_in + "' at byte offset " +
              std::to_string(offset_in)),
        file(std::move(file_in)),
        offset(offset_in) {}

  std::string file;
  std::size_t offset;
};

}  // namespace montok

#pragma once

#include <stdexcept>
#include <string>

namespace graspdet {

// Base class for every failure the library reports. Parsers and numeric
// routines never crash on bad input; they throw one of the typed errors
// below so callers can branch on the failure kind.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define GRASPDET_DEFINE_ERROR(Name)                        \
  struct Name : Error {                                    \
    explicit Name(const std::string& msg)                  \
        : Error(std::string(#Name) + ": " + msg) {}        \
  }

// geometry
GRASPDET_DEFINE_ERROR(NonRectangular);

// ingest
GRASPDET_DEFINE_ERROR(MalformedLine);
GRASPDET_DEFINE_ERROR(TruncatedGroup);
GRASPDET_DEFINE_ERROR(UnsupportedEncoding);
GRASPDET_DEFINE_ERROR(MissingField);
GRASPDET_DEFINE_ERROR(IndexOutOfRange);
GRASPDET_DEFINE_ERROR(BadMagic);
GRASPDET_DEFINE_ERROR(BadMaxval);
GRASPDET_DEFINE_ERROR(ShortPayload);
GRASPDET_DEFINE_ERROR(DimensionMismatch);
GRASPDET_DEFINE_ERROR(FileError);

// augment
GRASPDET_DEFINE_ERROR(SingularTransform);
GRASPDET_DEFINE_ERROR(NonSimilarity);

// encoding
GRASPDET_DEFINE_ERROR(EmptyGroundTruth);
GRASPDET_DEFINE_ERROR(NullClassHasNoAngle);
GRASPDET_DEFINE_ERROR(LabelOutOfRange);

// autodiff
GRASPDET_DEFINE_ERROR(ShapeMismatch);

// detector
GRASPDET_DEFINE_ERROR(NoSampledAnchors);
GRASPDET_DEFINE_ERROR(NoSampledRois);
GRASPDET_DEFINE_ERROR(NonFiniteLoss);
GRASPDET_DEFINE_ERROR(IncompatibleCheckpoint);

// evaluation
GRASPDET_DEFINE_ERROR(EmptyDataset);
GRASPDET_DEFINE_ERROR(NoDetections);

// cli
GRASPDET_DEFINE_ERROR(ConfigError);

#undef GRASPDET_DEFINE_ERROR

}  // namespace graspdet

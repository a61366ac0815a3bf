#pragma once

#include <stdexcept>
#include <string>

namespace vscene {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define VSCENE_DEFINE_ERROR(Name)          \
    class Name : public Error {            \
    public:                                \
        using Error::Error;                \
    }

VSCENE_DEFINE_ERROR(DegenerateContour);
VSCENE_DEFINE_ERROR(WeightSimplexViolation);
VSCENE_DEFINE_ERROR(InvalidScene);
VSCENE_DEFINE_ERROR(LayoutMismatch);
VSCENE_DEFINE_ERROR(DimensionMismatch);
VSCENE_DEFINE_ERROR(NotEnoughCandidates);
VSCENE_DEFINE_ERROR(ShapeMismatch);
VSCENE_DEFINE_ERROR(IoFailure);
VSCENE_DEFINE_ERROR(EmptyManifest);
VSCENE_DEFINE_ERROR(InvalidK);
VSCENE_DEFINE_ERROR(InvalidRange);
VSCENE_DEFINE_ERROR(TooSmall);
VSCENE_DEFINE_ERROR(LengthMismatch);
VSCENE_DEFINE_ERROR(ParseError);
VSCENE_DEFINE_ERROR(ValidationError);

#undef VSCENE_DEFINE_ERROR

/// Raised when an object's polygon cannot be triangulated.
class TriangulationFailure : public Error {
public:
    TriangulationFailure(std::size_t object_index, const std::string& what)
        : Error("object " + std::to_string(object_index) + ": " + what), object_index_(object_index) {}

    std::size_t object_index() const noexcept { return object_index_; }

private:
    std::size_t object_index_;
};

}  // namespace vscene

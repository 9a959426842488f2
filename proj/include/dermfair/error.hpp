#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dermfair {

enum class ErrorKind {
    InvalidArgument,
    Io,
    Parse,
    EmptyMask,
    DegenerateChroma,
    ArtifactRejection,
    BinMismatch,
    DimensionMismatch,
    EmptyReference,
    DegenerateImage,
    EmptyTruth,
    SingleClass,
    MissingPrediction,
    UnknownDiagnosis,
    MissingFile,
    UnvalidatedImage,
    DuplicateId,
    MalformedLog,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so the CLI can emit a
// machine-readable summary.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace dermfair

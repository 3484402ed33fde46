#pragma once

#include <stdexcept>
#include <string>

namespace t4c {

// Every failure the library reports derives from Error. The CLI maps each
// subclass to its own exit code (see exit_code()).
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation requires.
class ShapeError : public Error {
   public:
    using Error::Error;
};

// A T4GR file (or other on-disk artifact) is malformed.
class FormatError : public Error {
   public:
    using Error::Error;
};

// Invalid arguments or configuration (empty inputs, bad manifest values).
class ConfigError : public Error {
   public:
    using Error::Error;
};

// Two collections that must line up slot-by-slot do not.
class AlignmentError : public Error {
   public:
    using Error::Error;
};

// Prediction file protocol violations (missing slot files).
class ProtocolError : public Error {
   public:
    using Error::Error;
};

class BoundsError : public Error {
   public:
    using Error::Error;
};

class IoError : public Error {
   public:
    using Error::Error;
};

// Raised by the pipeline when a stage fails; carries the stage name and the
// file that triggered the failure, if any.
class StageError : public Error {
   public:
    StageError(std::string stage, std::string file, const std::string& what)
        : Error("stage '" + stage + "' failed" + (file.empty() ? "" : " on '" + file + "'") + ": " + what),
          stage_(std::move(stage)),
          file_(std::move(file)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& file() const noexcept { return file_; }

   private:
    std::string stage_;
    std::string file_;
};

// Process exit code for an error class. 0 is success, 2 is reserved for
// command-line usage errors.
int exit_code(const std::exception& e) noexcept;

}  // namespace t4c

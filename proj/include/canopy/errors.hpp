#pragma once

#include <stdexcept>
#include <string>

namespace canopy {

// Process exit codes used by the CLI: 0 success, 1 usage, 2 input/parse,
// 3 degenerate data, 4 I/O.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  input = 2,
  degenerate = 3,
  io = 4,
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct InputError : PipelineError {
  explicit InputError(const std::string& what)
      : PipelineError(ExitCode::input, what) {}
};

struct DegenerateError : PipelineError {
  explicit DegenerateError(const std::string& what)
      : PipelineError(ExitCode::degenerate, what) {}
};

// Parse-layer errors (exit code 2).
struct MalformedHeader : InputError { using InputError::InputError; };
struct TruncatedBody : InputError { using InputError::InputError; };
struct MalformedRow : InputError { using InputError::InputError; };
struct DuplicateFrame : InputError { using InputError::InputError; };
struct SchemaViolation : InputError { using InputError::InputError; };
struct EmptyFrames : InputError { using InputError::InputError; };
struct TypeMismatch : InputError { using InputError::InputError; };
struct OutOfRange : InputError { using InputError::InputError; };

// Degenerate-data errors (exit code 3).
struct DegenerateGeometry : DegenerateError { using DegenerateError::DegenerateError; };
struct LengthMismatch : DegenerateError { using DegenerateError::DegenerateError; };
struct DegenerateRange : DegenerateError { using DegenerateError::DegenerateError; };
struct EmptyCloud : DegenerateError { using DegenerateError::DegenerateError; };
struct EmptyMask : DegenerateError { using DegenerateError::DegenerateError; };
struct NoMarkers : DegenerateError { using DegenerateError::DegenerateError; };
struct MarkerOutsideCanopy : DegenerateError { using DegenerateError::DegenerateError; };
struct NoLabels : DegenerateError { using DegenerateError::DegenerateError; };
struct EmptyInventory : DegenerateError { using DegenerateError::DegenerateError; };
struct PackingInfeasible : DegenerateError { using DegenerateError::DegenerateError; };

struct IoFailure : PipelineError {
  explicit IoFailure(const std::string& what)
      : PipelineError(ExitCode::io, what) {}
};

}  // namespace canopy

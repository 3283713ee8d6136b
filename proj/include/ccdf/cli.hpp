#pragma once

#include <iosfwd>

#include "ccdf/error.hpp"

namespace ccdf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitNumerical = 3;

// parse, validation, shape and contract errors are all validation failures
// from the caller's side; domain errors count as numerical.
int exit_code(ErrorKind kind);

// Entry point behind the `ccdf` binary: gen, stats, train, eval, infer.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ccdf::cli

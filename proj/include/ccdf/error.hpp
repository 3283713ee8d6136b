#pragma once

#include <stdexcept>
#include <string>

namespace ccdf {

// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  parse,       // malformed input file content
  validation,  // well-formed input with out-of-range or inconsistent values
  io,          // missing or unwritable files
  shape,       // tensor / checkpoint shape disagreement
  domain,      // math outside an op's domain (log of non-positive, ...)
  contract,    // caller broke an API precondition
  numerical,   // non-finite values during training
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CCDF_DEFINE_ERROR(Name, Kind)                                \
  class Name : public Error {                                        \
   public:                                                           \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

CCDF_DEFINE_ERROR(ParseError, ErrorKind::parse)
CCDF_DEFINE_ERROR(ValidationError, ErrorKind::validation)
CCDF_DEFINE_ERROR(IoError, ErrorKind::io)
CCDF_DEFINE_ERROR(ShapeError, ErrorKind::shape)
CCDF_DEFINE_ERROR(DomainError, ErrorKind::domain)
CCDF_DEFINE_ERROR(ContractError, ErrorKind::contract)
CCDF_DEFINE_ERROR(NumericalError, ErrorKind::numerical)

#undef CCDF_DEFINE_ERROR

}  // namespace ccdf

#pragma once

#include <stdexcept>
#include <string>

namespace vseg {

enum class ErrorKind {
  Format,      // unsupported or malformed file contents
  Truncation,  // fewer samples than the header announces
  Header,      // header field out of range
  Argument,    // parameter outside its documented domain
  Size,        // image too small for the requested operation
  EmptyField,  // no gradient survived thresholding
  Degeneracy,  // zero-length edge or zero-norm curve varifold
  Divergence,  // non-finite state during integration or optimization
};

const char* to_string(ErrorKind kind);

/// Base exception for every recoverable failure in the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Same error with `stage: ` prepended to the message.
Error with_stage(const Error& e, const std::string& stage);

}  // namespace vseg

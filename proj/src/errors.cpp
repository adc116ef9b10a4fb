#include "vseg/errors.hpp"

namespace vseg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Truncation: return "truncation error";
    case ErrorKind::Header: return "header error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::EmptyField: return "empty gradient field";
    case ErrorKind::Degeneracy: return "degeneracy error";
    case ErrorKind::Divergence: return "divergence error";
  }
  return "error";
}

Error with_stage(const Error& e, const std::string& stage) {
  return Error(e.kind(), stage + ": " + e.what());
}

}  // namespace vseg

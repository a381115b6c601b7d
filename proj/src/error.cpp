#include "dmcrop/error.hpp"

namespace dmcrop {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid_argument";
    case ErrorKind::kParse:
      return "parse";
    case ErrorKind::kIntegrity:
      return "integrity";
    case ErrorKind::kFormat:
      return "format";
    case ErrorKind::kValidation:
      return "validation";
    case ErrorKind::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace dmcrop

#ifndef DMCROP_ERROR_HPP_
#define DMCROP_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmcrop {

enum class ErrorKind {
  kInvalidArgument,  // precondition on an argument violated
  kParse,            // malformed JSON or text input
  kIntegrity,        // dangling reference inside a dataset
  kFormat,           // bad binary raster file
  kValidation,       // value outside its allowed range
  kIo,               // filesystem failure
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. The kind is stable and is what the
/// command line reports in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dmcrop

#endif  // DMCROP_ERROR_HPP_

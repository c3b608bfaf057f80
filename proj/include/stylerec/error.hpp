#ifndef STYLEREC_ERROR_HPP_
#define STYLEREC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace stylerec {

// Error taxonomy mirrors the CLI exit codes: usage = 1, data = 2, internal = 3.
enum class ErrorKind { usage, data, internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& message) {
  throw Error(ErrorKind::usage, message);
}

[[noreturn]] inline void throw_data(const std::string& message) {
  throw Error(ErrorKind::data, message);
}

[[noreturn]] inline void throw_internal(const std::string& message) {
  throw Error(ErrorKind::internal, message);
}

}  // namespace stylerec

#endif  // STYLEREC_ERROR_HPP_

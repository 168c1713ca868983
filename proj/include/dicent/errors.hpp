#pragma once

#include <stdexcept>
#include <string>

namespace dicent {

// Exit-code categories used by the CLI: 1 usage, 2 data, 3 numerical.
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParseError : Error {
  ParseError(int line, const std::string& msg)
      : Error(ErrorKind::Data, "parse error at line " + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct OverlapWithinMention : Error {
  explicit OverlapWithinMention(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct TooManyComponents : Error {
  explicit TooManyComponents(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct MultiLabelConflict : Error {
  explicit MultiLabelConflict(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct UnknownAttribute : Error {
  explicit UnknownAttribute(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct InstanceTooLarge : Error {
  explicit InstanceTooLarge(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct NonConvergence : Error {
  explicit NonConvergence(const std::string& msg) : Error(ErrorKind::Numeric, msg) {}
};

struct InfeasibleConfig : Error {
  explicit InfeasibleConfig(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct NoEncodableInstances : Error {
  explicit NoEncodableInstances(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct VersionMismatch : Error {
  explicit VersionMismatch(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

}  // namespace dicent

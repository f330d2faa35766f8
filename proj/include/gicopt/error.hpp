#pragma once

#include <stdexcept>
#include <string>

namespace gicopt {

// Process exit codes used by the CLI. Each error class maps to exactly one.
enum class ExitCode : int {
  Ok = 0,
  Usage = 2,
  CaseParse = 3,
  Validation = 4,
  DcBuild = 5,
  SingularNetwork = 6,
  AcDivergence = 7,
  Infeasible = 8,
  Io = 9,
  Internal = 10,
};

// Base of every error raised by the library. `module()` names the stage that
// failed so the CLI can report provenance.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& what, ExitCode code)
      : std::runtime_error(module + ": " + what), module_(std::move(module)), code_(code) {}

  const std::string& module() const noexcept { return module_; }
  ExitCode exit_code() const noexcept { return code_; }

 private:
  std::string module_;
  ExitCode code_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("case-model", what, ExitCode::CaseParse) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error("case-model", what, ExitCode::Validation) {}
};

class BuildError : public Error {
 public:
  explicit BuildError(const std::string& what, std::string module = "dc-builder")
      : Error(std::move(module), what, ExitCode::DcBuild) {}
};

class SingularNetworkError : public Error {
 public:
  explicit SingularNetworkError(const std::string& what)
      : Error("gic-engine", what, ExitCode::SingularNetwork) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double residual)
      : Error("ac-opf", what, ExitCode::AcDivergence), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string module, const std::string& what)
      : Error(std::move(module), what, ExitCode::Infeasible) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what, ExitCode::Io) {}
};

}  // namespace gicopt

#pragma once

#include <cstddef>
#include <exception>
#include <string>
#include <utility>

namespace vlaudit {

/// Broad class of a failure; the CLI maps it onto its exit-code contract.
enum class ErrorClass { Input, Computation };

/// Base of every error thrown by the engine. Context can be prepended while
/// the exception propagates (`e.add_context(...); throw;`) without losing the
/// dynamic type.
class Error : public std::exception {
 public:
  Error(ErrorClass cls, std::string kind, std::string message)
      : class_(cls), kind_(std::move(kind)), detail_(std::move(message)) {
    rebuild();
  }

  const char* what() const noexcept override { return what_.c_str(); }
  ErrorClass error_class() const noexcept { return class_; }
  const std::string& kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

  void add_context(const std::string& context) {
    context_ = context_.empty() ? context : context + ": " + context_;
    rebuild();
  }

 private:
  void rebuild() {
    what_ = kind_ + ": " + (context_.empty() ? detail_ : context_ + ": " + detail_);
  }

  ErrorClass class_;
  std::string kind_;
  std::string detail_;
  std::string context_;
  std::string what_;
};

#define VLAUDIT_DEFINE_ERROR(Name, Class)                  \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(std::string message)                     \
        : Error(ErrorClass::Class, #Name, std::move(message)) {} \
  };

// Bad or inconsistent inputs.
VLAUDIT_DEFINE_ERROR(FormatError, Input)
VLAUDIT_DEFINE_ERROR(AlignmentError, Input)
VLAUDIT_DEFINE_ERROR(DataError, Input)
VLAUDIT_DEFINE_ERROR(IoError, Input)
VLAUDIT_DEFINE_ERROR(SchemaError, Input)
VLAUDIT_DEFINE_ERROR(ManifestError, Input)
VLAUDIT_DEFINE_ERROR(ComparabilityError, Input)

// Failures inside numeric kernels.
VLAUDIT_DEFINE_ERROR(DimError, Computation)
VLAUDIT_DEFINE_ERROR(StateError, Computation)
VLAUDIT_DEFINE_ERROR(DegenerateDistributionError, Computation)
VLAUDIT_DEFINE_ERROR(EmptyRetrievalError, Computation)
VLAUDIT_DEFINE_ERROR(DomainError, Computation)

#undef VLAUDIT_DEFINE_ERROR

/// Raised when a row cannot be normalized because its norm is (near) zero.
class DegenerateVectorError : public Error {
 public:
  explicit DegenerateVectorError(std::size_t row)
      : Error(ErrorClass::Computation, "DegenerateVectorError",
              "row " + std::to_string(row) + " has zero norm"),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace vlaudit

#pragma once

#include <stdexcept>
#include <string>

namespace clustem {

// Every failure raised by the library derives from Error. The category lets
// the command-line front end map failures to exit codes without string
// matching.
enum class ErrorCategory {
  Config,    // bad flags, schema problems, missing columns, invalid params
  Input,     // malformed files, coverage gaps, invalid data
  Provider,  // embedding source failures (OOV, HTTP, malformed responses)
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define CLUSTEM_DEFINE_ERROR(Name, Category)                  \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what)                    \
        : Error(ErrorCategory::Category, what) {}             \
  };

// Ragged CSV rows, unterminated quotes.
CLUSTEM_DEFINE_ERROR(StructuralError, Input)
// Duplicate or empty column names.
CLUSTEM_DEFINE_ERROR(SchemaError, Config)
// QI/SA names that do not resolve against a table.
CLUSTEM_DEFINE_ERROR(SpecError, Config)
CLUSTEM_DEFINE_ERROR(ArgumentError, Config)
CLUSTEM_DEFINE_ERROR(InputError, Input)
CLUSTEM_DEFINE_ERROR(FormatError, Input)
CLUSTEM_DEFINE_ERROR(ValidationError, Input)
// A table value that has no leaf in the attribute's hierarchy.
CLUSTEM_DEFINE_ERROR(CoverageError, Input)
// Vectors of differing dimension inside one computation.
CLUSTEM_DEFINE_ERROR(ConsistencyError, Input)
CLUSTEM_DEFINE_ERROR(OovError, Provider)
CLUSTEM_DEFINE_ERROR(ProviderError, Provider)
CLUSTEM_DEFINE_ERROR(IoError, Io)

#undef CLUSTEM_DEFINE_ERROR

}  // namespace clustem

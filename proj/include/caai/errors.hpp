#pragma once

#include <stdexcept>
#include <string>

namespace caai {

// Every library error derives from Error so front ends can map them to exit
// codes in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CAAI_DEFINE_ERROR(Name)                        \
  class Name : public Error {                          \
   public:                                             \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

// Configuration and input-document errors (exit code 2 in the CLI).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

#define CAAI_DEFINE_CONFIG_ERROR(Name)                              \
  class Name : public ConfigurationError {                          \
   public:                                                          \
    explicit Name(const std::string& what) : ConfigurationError(#Name ": " + what) {} \
  }

CAAI_DEFINE_CONFIG_ERROR(ParseError);
CAAI_DEFINE_CONFIG_ERROR(SchemaError);
CAAI_DEFINE_CONFIG_ERROR(ConfigError);
CAAI_DEFINE_CONFIG_ERROR(ConstraintViolation);

CAAI_DEFINE_ERROR(UnknownGoal);
CAAI_DEFINE_ERROR(UnknownAlgorithm);
CAAI_DEFINE_ERROR(RangeError);
CAAI_DEFINE_ERROR(InvalidDataset);
CAAI_DEFINE_ERROR(SingularCovariance);
CAAI_DEFINE_ERROR(BudgetExceeded);
CAAI_DEFINE_ERROR(OutOfBounds);
CAAI_DEFINE_ERROR(InstanceSetTooSmall);
CAAI_DEFINE_ERROR(DuplicatePipelineInGroup);
CAAI_DEFINE_ERROR(DegenerateInput);
CAAI_DEFINE_ERROR(MissingBaseline);
CAAI_DEFINE_ERROR(MalformedInput);
CAAI_DEFINE_ERROR(IOError);

#undef CAAI_DEFINE_ERROR
#undef CAAI_DEFINE_CONFIG_ERROR

}  // namespace caai

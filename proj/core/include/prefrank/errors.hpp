#pragma once

#include <stdexcept>
#include <string>

namespace prefrank {

// Every failure raised by the library derives from Error so callers can
// catch the whole family in one place (the CLI maps it to exit code 2).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PREFRANK_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}         \
  }

// face-sim
PREFRANK_DEFINE_ERROR(InvalidActuator);
// dataset
PREFRANK_DEFINE_ERROR(DegenerateVector);
PREFRANK_DEFINE_ERROR(InsufficientPool);
PREFRANK_DEFINE_ERROR(InvalidImage);
// ranking
PREFRANK_DEFINE_ERROR(InvalidItems);
PREFRANK_DEFINE_ERROR(StaleAnswer);
PREFRANK_DEFINE_ERROR(InvalidWinner);
PREFRANK_DEFINE_ERROR(IncomparableRankings);
// prefmodel
PREFRANK_DEFINE_ERROR(InvalidInput);
PREFRANK_DEFINE_ERROR(NoData);
PREFRANK_DEFINE_ERROR(InvalidSplit);
// bayesopt
PREFRANK_DEFINE_ERROR(IllConditioned);
// io / manifests
PREFRANK_DEFINE_ERROR(IoError);
PREFRANK_DEFINE_ERROR(FormatError);

#undef PREFRANK_DEFINE_ERROR

}  // namespace prefrank

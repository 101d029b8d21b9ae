#pragma once

#include <stdexcept>
#include <string>

namespace molgram {

// Base class for every recoverable error raised by this library. Anything
// not derived from Error (e.g. std::logic_error) indicates an internal
// invariant violation, not bad user input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MOLGRAM_DEFINE_ERROR(name)              \
  class name : public Error {                   \
   public:                                      \
    using Error::Error;                         \
  }

// molgraph
MOLGRAM_DEFINE_ERROR(SyntaxError);
MOLGRAM_DEFINE_ERROR(ValenceError);
MOLGRAM_DEFINE_ERROR(UnsupportedFeature);
MOLGRAM_DEFINE_ERROR(DimensionMismatch);

// hypergraph / grammar
MOLGRAM_DEFINE_ERROR(InvalidComponent);
MOLGRAM_DEFINE_ERROR(NonTerminalPresent);
MOLGRAM_DEFINE_ERROR(StaleMatch);
MOLGRAM_DEFINE_ERROR(BudgetExceeded);
MOLGRAM_DEFINE_ERROR(DeadEnd);
MOLGRAM_DEFINE_ERROR(GrammarFormatError);

// learn
MOLGRAM_DEFINE_ERROR(UnknownEdge);
MOLGRAM_DEFINE_ERROR(MetricFailure);
MOLGRAM_DEFINE_ERROR(EmptyDataset);

// metrics
MOLGRAM_DEFINE_ERROR(EmptyBatch);
MOLGRAM_DEFINE_ERROR(TooFew);
MOLGRAM_DEFINE_ERROR(UnknownPattern);
MOLGRAM_DEFINE_ERROR(ProcessFailure);
MOLGRAM_DEFINE_ERROR(ProtocolError);
MOLGRAM_DEFINE_ERROR(TimeoutError);

#undef MOLGRAM_DEFINE_ERROR

}  // namespace molgram

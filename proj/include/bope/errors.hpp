#pragma once

#include <stdexcept>
#include <string>

namespace bope {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define BOPE_ERROR(Name)                                   \
  struct Name : Error {                                    \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

BOPE_ERROR(NonStochasticRow);
BOPE_ERROR(RewardOutOfRange);
BOPE_ERROR(BadDiscount);
BOPE_ERROR(UnreachableObservation);
BOPE_ERROR(TreeTooLarge);
BOPE_ERROR(DanglingFrontier);
BOPE_ERROR(SupportViolation);
BOPE_ERROR(DomainMismatch);
BOPE_ERROR(SchemaMismatch);
BOPE_ERROR(HashMismatch);
BOPE_ERROR(UnknownLemma);
BOPE_ERROR(BadSpec);

#undef BOPE_ERROR

}  // namespace bope

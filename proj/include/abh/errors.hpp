#pragma once

#include <stdexcept>
#include <string>

namespace abh {

// Base for every numerical or configuration failure raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HorizonSingular : Error { using Error::Error; };
struct QuadratureNonConvergent : Error { using Error::Error; };
struct ZeroCoupling : Error { using Error::Error; };
struct OutOfRegime : Error { using Error::Error; };
struct NoRoot : Error {
  NoRoot(const std::string& what, double lower_bound)
      : Error(what), lower_bound(lower_bound) {}
  double lower_bound;  // t_D is at least this large
};
struct StepFailure : Error { using Error::Error; };
struct NonConvergentSum : Error { using Error::Error; };
struct DegenerateMode : Error { using Error::Error; };
struct CovarianceNotPSD : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace abh

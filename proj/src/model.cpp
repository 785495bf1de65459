#include "phasecrit/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace phasecrit {

void SpinModel::validate(int min_delta) const {
  if (!(std::isfinite(b1) && b1 >= 0.0)) throw std::invalid_argument("b1 must be finite and >= 0");
  if (!(std::isfinite(b2) && b2 > 0.0)) throw std::invalid_argument("b2 must be finite and > 0");
  if (!(std::isfinite(lambda) && lambda > 0.0))
    throw std::invalid_argument("lambda must be finite and > 0");
  if (delta < min_delta)
    throw std::invalid_argument("delta must be >= " + std::to_string(min_delta));
}

std::string describe(const SpinModel& m) {
  std::ostringstream os;
  os.precision(17);
  os << "(b1=" << m.b1 << ", b2=" << m.b2 << ", lambda=" << m.lambda << ", delta=" << m.delta
     << ")";
  return os.str();
}

double hardcore_lambda_c(int delta) {
  if (delta < 3) throw std::invalid_argument("hardcore_lambda_c: delta must be >= 3");
  return std::pow(delta - 1.0, delta - 1.0) / std::pow(delta - 2.0, delta);
}

double ising_b_c(int delta) {
  if (delta < 3) throw std::invalid_argument("ising_b_c: delta must be >= 3");
  return (delta - 2.0) / delta;
}

}  // namespace phasecrit

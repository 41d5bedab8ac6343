#include "ssca/schedules.hpp"

#include <cmath>
#include <sstream>

#include "ssca/errors.hpp"

namespace ssca {

double StepsizeSchedule::value(unsigned t) const {
  if (t == 0) throw InvalidArgument("stepsize schedule: round index starts at 1");
  const double v = kind == ScheduleKind::Constant
                       ? coefficient
                       : coefficient / std::pow(static_cast<double>(t), exponent);
  if (!(v > 0.0) || v > 1.0) {
    std::ostringstream msg;
    msg << "stepsize " << describe(*this) << " gives " << v << " at t=" << t
        << ", outside (0, 1]";
    throw RangeError(msg.str());
  }
  return v;
}

ScheduleValidityReport validate_pair(const StepsizeSchedule& rho, const StepsizeSchedule& gamma) {
  ScheduleValidityReport r;
  const double a_rho = rho.coefficient;
  const double e_rho = rho.vanishes() ? rho.exponent : 0.0;
  const double e_gamma = gamma.vanishes() ? gamma.exponent : 0.0;

  // rho -> 0 needs a positive exponent; sum rho = inf needs exponent <= 1.
  r.rho_ok = e_rho > 0.0 && e_rho <= 1.0 && a_rho > 0.0 && a_rho <= 1.0;
  if (!r.rho_ok) {
    if (e_rho <= 0.0) r.notes.push_back("rho does not vanish (exponent 0)");
    if (e_rho > 1.0) r.notes.push_back("rho is summable (exponent > 1)");
    if (!(a_rho > 0.0 && a_rho <= 1.0)) r.notes.push_back("rho coefficient outside (0, 1]");
  }

  r.gamma_square_summable = 2.0 * e_gamma > 1.0;
  if (!r.gamma_square_summable) {
    std::ostringstream n;
    n << "sum of gamma^2 diverges (2*alpha_gamma = " << 2.0 * e_gamma << " <= 1)";
    r.notes.push_back(n.str());
  }

  r.gamma_over_rho_vanishes = e_gamma > e_rho;
  if (!r.gamma_over_rho_vanishes) {
    std::ostringstream n;
    n << "gamma/rho does not vanish (alpha_gamma = " << e_gamma << " <= alpha_rho = " << e_rho
      << ")";
    r.notes.push_back(n.str());
  }

  if (gamma.vanishes() && gamma.exponent > 1.0) {
    r.notes.push_back("sum of gamma is finite (exponent > 1)");
  }
  return r;
}

std::string describe(const StepsizeSchedule& s) {
  std::ostringstream o;
  if (s.kind == ScheduleKind::Constant) {
    o << s.coefficient;
  } else {
    o << s.coefficient << "/t^" << s.exponent;
  }
  return o.str();
}

}  // namespace ssca

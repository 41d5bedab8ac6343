#pragma once

#include <string>
#include <vector>

namespace ssca {

enum class ScheduleKind { PowerDecay, Constant };

/// value(t) = coefficient / t^exponent (power decay) or coefficient (constant).
struct StepsizeSchedule {
  double coefficient = 1.0;
  double exponent = 0.0;
  ScheduleKind kind = ScheduleKind::PowerDecay;

  static StepsizeSchedule power(double a, double alpha) {
    return {a, alpha, ScheduleKind::PowerDecay};
  }
  static StepsizeSchedule constant(double a) { return {a, 0.0, ScheduleKind::Constant}; }

  /// Throws InvalidArgument for t == 0 and RangeError if the value leaves (0, 1].
  double value(unsigned t) const;

  /// True when the sequence tends to zero.
  bool vanishes() const noexcept {
    return kind == ScheduleKind::PowerDecay && exponent > 0.0;
  }
};

struct ScheduleValidityReport {
  bool rho_ok = false;
  bool gamma_square_summable = false;
  bool gamma_over_rho_vanishes = false;
  std::vector<std::string> notes;

  bool all_ok() const noexcept { return rho_ok && gamma_square_summable && gamma_over_rho_vanishes; }
};

/// Checks the diminishing-stepsize conditions analytically from the exponents.
/// Report-only: never throws for a violated condition.
ScheduleValidityReport validate_pair(const StepsizeSchedule& rho, const StepsizeSchedule& gamma);

std::string describe(const StepsizeSchedule& s);

}  // namespace ssca

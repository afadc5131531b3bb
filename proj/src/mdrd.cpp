#include "hte/mdrd.hpp"

#include <cmath>

#include "hte/types.hpp"

namespace hte {

double mdrd_gfr(const MdrdInput& in, bool recalibrate_scr) {
  if (!(in.scr > 0.0 && in.age_years > 0.0 && in.bun > 0.0 && in.salb > 0.0)) {
    throw DomainError("MDRD inputs must be positive");
  }
  const double scr = recalibrate_scr ? in.scr - kScrRecalibration : in.scr;
  if (!(scr > 0.0)) throw DomainError("recalibrated serum creatinine is not positive");
  double gfr = 170.0 * std::pow(scr, -0.999) * std::pow(in.age_years, -0.176) *
               std::pow(in.bun, -0.170) * std::pow(in.salb, 0.318);
  if (in.is_black) gfr *= 1.180;
  if (in.is_female) gfr *= 0.762;
  return gfr;
}

}  // namespace hte

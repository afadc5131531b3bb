#pragma once

namespace hte {

struct MdrdInput {
  double scr = 0.0;  // serum creatinine, mg/dL
  double age_years = 0.0;
  double bun = 0.0;  // blood urea nitrogen, mg/dL
  double salb = 0.0; // serum albumin, g/dL
  bool is_black = false;
  bool is_female = false;
};

// Recalibration offset subtracted from serum creatinine (mg/dL).
constexpr double kScrRecalibration = 0.23;

// Estimated GFR in mL/min/1.73m^2 from the six-variable MDRD equation.
double mdrd_gfr(const MdrdInput& in, bool recalibrate_scr = false);

// Grade-3 chronic kidney disease threshold.
inline bool ckd_stage3(double gfr) { return gfr < 60.0; }

}  // namespace hte

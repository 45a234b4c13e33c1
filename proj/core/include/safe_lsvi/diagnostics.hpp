#pragma once

// Relation between true and estimated within-support safety differences:
//   Delta_h(s,a,s')   = max_{s''} c(s,a,s'') - c(s,a,s')
//   Delta~_h(s,a,s')  = max_{s''} c~(s,a,s'') - c~(s,a,s')
//   slack = Delta_h + 2 beta u(s,a,s~_max) - Delta~_h
// with s~_max the maximizer of Delta~ (smallest index on ties). The slack is
// non-negative whenever the estimator's confidence event holds.

#include <ostream>
#include <vector>

#include "safe_lsvi/mdp.hpp"
#include "safe_lsvi/safe_sets.hpp"
#include "safe_lsvi/safety_estimator.hpp"

namespace safe_lsvi {

struct SafetyGapEntry {
  Triplet triplet;
  double true_gap = 0.0;
  double est_gap = 0.0;
  double slack = 0.0;
};

struct SafetyGapReport {
  int k = 0;
  std::vector<SafetyGapEntry> entries;

  double min_slack() const;
  bool all_finite() const;
};

/// One entry per estimated-safe (h, s, a) and every s' in its support.
SafetyGapReport lemma6_check(const MdpInstance& inst, const SafetyEstimator& est, const SafeSets& sets, int k);

/// Header "h,s,a,s_prime,true_gap,est_gap,slack", 12 significant digits.
void write_gap_csv(const SafetyGapReport& report, std::ostream& out, bool header = true);

}  // namespace safe_lsvi

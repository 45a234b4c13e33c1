#include "safe_lsvi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace safe_lsvi {

double SafetyGapReport::min_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries) m = std::min(m, e.slack);
  return m;
}

bool SafetyGapReport::all_finite() const {
  return std::all_of(entries.begin(), entries.end(), [](const SafetyGapEntry& e) {
    return std::isfinite(e.true_gap) && std::isfinite(e.est_gap) && std::isfinite(e.slack);
  });
}

SafetyGapReport lemma6_check(const MdpInstance& inst, const SafetyEstimator& est, const SafeSets& sets, int k) {
  SafetyGapReport report;
  report.k = k;
  for (int h = 0; h < inst.H; ++h) {
    for (int s = 0; s < inst.num_states(h); ++s) {
      if (!sets.contains_state(h, s)) continue;
      for (int a : sets.actions[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)]) {
        const auto& p = inst.pair(h, s, a);
        std::vector<double> c_true;
        std::vector<double> c_est;
        std::vector<double> unc;
        for (int sn : p.support) {
          const Vec& phi = p.phi[static_cast<std::size_t>(sn)];
          c_true.push_back(true_cost(inst, h, s, a, sn));
          c_est.push_back(est.estimate(h, phi).c_tilde);
          unc.push_back(est.uncertainty(h, phi));
        }
        const double true_max = *std::max_element(c_true.begin(), c_true.end());
        const auto it = std::max_element(c_est.begin(), c_est.end());
        const double est_max = *it;
        const double u_max = unc[static_cast<std::size_t>(it - c_est.begin())];
        for (std::size_t j = 0; j < p.support.size(); ++j) {
          SafetyGapEntry e;
          e.triplet = Triplet{h, s, a, p.support[j]};
          e.true_gap = true_max - c_true[j];
          e.est_gap = est_max - c_est[j];
          e.slack = e.true_gap + 2.0 * est.beta() * u_max - e.est_gap;
          report.entries.push_back(e);
        }
      }
    }
  }
  return report;
}

void write_gap_csv(const SafetyGapReport& report, std::ostream& out, bool header) {
  if (header) out << "h,s,a,s_prime,true_gap,est_gap,slack\n";
  char buf[160];
  for (const auto& e : report.entries) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.12g,%.12g,%.12g\n", e.triplet.h, e.triplet.s, e.triplet.a,
                  e.triplet.s_next, e.true_gap, e.est_gap, e.slack);
    out << buf;
  }
}

}  // namespace safe_lsvi

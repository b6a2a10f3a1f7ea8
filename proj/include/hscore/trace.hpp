#ifndef HSCORE_TRACE_HPP
#define HSCORE_TRACE_HPP

#include <vector>

#include "hscore/common.hpp"
#include "hscore/scoring.hpp"

namespace hscore {

// One prequential step.  t is 1-based; cumulative columns are prefix sums
// of the increments.  H accumulation starts at t = tau + 1: rows at or
// before tau carry a zero h increment.
struct TraceRow {
  int t = 0;
  double logev_inc = 0.0;
  double logev_cum = 0.0;
  ScoreIncrement h_inc;
  double h_cum = 0.0;
  double ess_before_temper = kNaN;
  int n_temper_steps = 0;
  double acceptance_rate = kNaN;
  int n_kde_excluded = 0;
  bool unreliable = false;
  bool degenerate = false;
};

struct PrequentialTrace {
  std::vector<TraceRow> rows;
  int tau = 0;

  int size() const { return static_cast<int>(rows.size()); }
  double final_logev() const { return rows.empty() ? 0.0 : rows.back().logev_cum; }
  double final_h() const { return rows.empty() ? 0.0 : rows.back().h_cum; }

  // Recomputes cumulative columns from increments (keeps the prefix-sum
  // invariant after any edit of increments).
  void recompute_cumulative() {
    double le = 0.0, h = 0.0;
    for (auto& r : rows) {
      le += r.logev_inc;
      h += r.h_inc.value;
      r.logev_cum = le;
      r.h_cum = h;
    }
  }
};

}  // namespace hscore

#endif

#pragma once

// Dense two-phase tableau simplex for the small day-ahead charging LP.

#include <span>
#include <string>
#include <vector>

#include "evsched/nn.hpp"

namespace evsched {

enum class ConstraintSense { LessEqual, Equal, GreaterEqual };

/// minimize c'x  s.t.  a_i x (sense_i) b_i,  x >= 0.
struct LinearProgram {
  Matrix a;
  Vector b;
  std::vector<ConstraintSense> sense;
  Vector c;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Vector x;
  double objective = 0.0;
  int pivots = 0;
};

/// Bland's rule throughout. With `lexicographic_ties`, the optimal face is
/// further searched for the lexicographically smallest x.
LpSolution solve_lp(const LinearProgram& lp, bool lexicographic_ties = true);

/// One charging plan: minimize sum(price_t * a_t) subject to
///   SOC_{t+1} = SOC_t + a_t,  soc_min <= SOC_t <= capacity for t >= 1,
///   SOC_H = soc_target,       -max_discharge <= a_t <= max_charge.
struct LpProblem {
  std::vector<double> prices;  // EUR/kWh, one per step; H = prices.size()
  double initial_soc = 0.0;
  double soc_min = 4.8;
  double capacity = 24.0;
  double soc_target = 24.0;
  double max_charge = 6.0;
  double max_discharge = 6.0;
};

struct ChargingPlan {
  bool feasible = false;
  /// Names the binding constraint when infeasible.
  std::string infeasibility;
  std::vector<double> schedule;  // kWh per step
  double objective = 0.0;        // EUR
};

ChargingPlan solve_charging_lp(const LpProblem& problem);

/// Action a with fl(soc + a) == bound whenever such an a exists near
/// bound - soc.
double land_on(double soc, double bound);

}  // namespace evsched

#include "evsched/lp.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace evsched {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr int kMaxPivots = 100000;

// Row m of the tableau holds reduced costs and -objective; the last column
// holds the right-hand side.
class Tableau {
 public:
  Tableau(Matrix t, std::vector<Eigen::Index> basis) : t_(std::move(t)), basis_(std::move(basis)) {}

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double rhs(Eigen::Index i) const { return t_(i, cols()); }
  double entry(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }
  double reduced_cost(Eigen::Index j) const { return t_(rows(), j); }
  double objective() const { return -t_(rows(), cols()); }
  Eigen::Index basic(Eigen::Index i) const { return basis_[static_cast<std::size_t>(i)]; }
  int pivots() const { return pivots_; }

  void set_objective(const Vector& cost) {
    const Eigen::Index m = rows();
    t_.row(m).setZero();
    t_.row(m).head(cols()) = cost.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double cb = cost[basic(i)];
      if (cb != 0.0) t_.row(m) -= cb * t_.row(i);
    }
  }

  LpStatus optimize(const std::vector<bool>& allowed) {
    const Eigen::Index m = rows();
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols(); ++j) {
        if (allowed[static_cast<std::size_t>(j)] && t_(m, j) < -kPivotTol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t_(i, enter) <= kPivotTol) continue;
        const double ratio = rhs(i) / t_(i, enter);
        if (leave < 0 || ratio < best - kPivotTol ||
            (std::abs(ratio - best) <= kPivotTol && basic(i) < basic(leave))) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      pivot(leave, enter);
      if (pivots_ > kMaxPivots) throw std::runtime_error("simplex exceeded its pivot limit");
    }
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    t_.row(r) /= t_(r, e);
    for (Eigen::Index i = 0; i <= rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, e);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = e;
    ++pivots_;
  }

  Vector solution(Eigen::Index n) const {
    Vector x = Vector::Zero(n);
    for (Eigen::Index i = 0; i < rows(); ++i) {
      if (basic(i) < n) x[basic(i)] = std::max(0.0, rhs(i));
    }
    return x;
  }

 private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
  int pivots_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, bool lexicographic_ties) {
  const Eigen::Index m = lp.a.rows();
  const Eigen::Index n = lp.a.cols();
  if (lp.b.size() != m || static_cast<Eigen::Index>(lp.sense.size()) != m || lp.c.size() != n) {
    throw std::invalid_argument("linear program dimensions disagree");
  }

  // Normalise to b >= 0 and count auxiliary columns.
  Matrix a = lp.a;
  Vector b = lp.b;
  std::vector<ConstraintSense> sense = lp.sense;
  Eigen::Index n_slack = 0;
  Eigen::Index n_art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& s = sense[static_cast<std::size_t>(i)];
    if (b[i] < 0.0) {
      a.row(i) *= -1.0;
      b[i] = -b[i];
      if (s == ConstraintSense::LessEqual) {
        s = ConstraintSense::GreaterEqual;
      } else if (s == ConstraintSense::GreaterEqual) {
        s = ConstraintSense::LessEqual;
      }
    }
    if (s != ConstraintSense::Equal) ++n_slack;
    if (s != ConstraintSense::LessEqual) ++n_art;
  }

  const Eigen::Index cols = n + n_slack + n_art;
  Matrix t = Matrix::Zero(m + 1, cols + 1);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  Eigen::Index slack = n;
  Eigen::Index art = n + n_slack;
  for (Eigen::Index i = 0; i < m; ++i) {
    t.row(i).head(n) = a.row(i);
    t(i, cols) = b[i];
    switch (sense[static_cast<std::size_t>(i)]) {
      case ConstraintSense::LessEqual:
        t(i, slack) = 1.0;
        basis[static_cast<std::size_t>(i)] = slack++;
        break;
      case ConstraintSense::GreaterEqual:
        t(i, slack++) = -1.0;
        t(i, art) = 1.0;
        basis[static_cast<std::size_t>(i)] = art++;
        break;
      case ConstraintSense::Equal:
        t(i, art) = 1.0;
        basis[static_cast<std::size_t>(i)] = art++;
        break;
    }
  }

  Tableau tab(std::move(t), std::move(basis));
  const Eigen::Index first_art = n + n_slack;
  LpSolution sol;

  if (n_art > 0) {
    Vector phase1 = Vector::Zero(cols);
    phase1.tail(n_art).setOnes();
    tab.set_objective(phase1);
    tab.optimize(std::vector<bool>(static_cast<std::size_t>(cols), true));
    const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();
    if (tab.objective() > 1e-9 * scale) {
      sol.status = LpStatus::Infeasible;
      sol.pivots = tab.pivots();
      return sol;
    }
    // Drive remaining (zero-level) artificials out of the basis; rows with no
    // structural entry left are redundant and keep their artificial at zero.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basic(i) < first_art) continue;
      for (Eigen::Index j = 0; j < first_art; ++j) {
        if (std::abs(tab.entry(i, j)) > kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  std::vector<bool> allowed(static_cast<std::size_t>(cols), false);
  for (Eigen::Index j = 0; j < first_art; ++j) allowed[static_cast<std::size_t>(j)] = true;
  Vector cost = Vector::Zero(cols);
  cost.head(n) = lp.c;
  tab.set_objective(cost);
  if (tab.optimize(allowed) == LpStatus::Unbounded) {
    sol.status = LpStatus::Unbounded;
    sol.pivots = tab.pivots();
    return sol;
  }

  if (lexicographic_ties) {
    auto lock_positive = [&] {
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (tab.reduced_cost(j) > kPivotTol) allowed[static_cast<std::size_t>(j)] = false;
      }
    };
    lock_positive();
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector unit = Vector::Zero(cols);
      unit[k] = 1.0;
      tab.set_objective(unit);
      tab.optimize(allowed);
      lock_positive();
    }
  }

  sol.status = LpStatus::Optimal;
  sol.x = tab.solution(n);
  sol.objective = lp.c.dot(sol.x);
  sol.pivots = tab.pivots();
  return sol;
}

double land_on(double soc, double bound) {
  double a = bound - soc;
  for (int i = 0; i < 4; ++i) {
    const double reached = soc + a;
    if (reached == bound) return a;
    a += bound - reached;
  }
  return a;
}

ChargingPlan solve_charging_lp(const LpProblem& p) {
  const auto horizon = static_cast<Eigen::Index>(p.prices.size());
  if (horizon < 1) throw std::invalid_argument("charging LP needs at least one step");
  if (!(p.max_charge > 0.0 && p.max_discharge > 0.0 && p.soc_min <= p.capacity)) {
    throw std::invalid_argument("charging LP has inconsistent bounds");
  }
  constexpr double kFeasTol = 1e-9;
  ChargingPlan plan;

  // Reachable SOC interval after each step; exact for this one-dimensional
  // system, so it also pins down which constraint blocks feasibility.
  double lo = p.initial_soc;
  double hi = p.initial_soc;
  for (Eigen::Index k = 1; k <= horizon; ++k) {
    lo -= p.max_discharge;
    hi += p.max_charge;
    if (k < horizon) {
      if (hi < p.soc_min - kFeasTol) {
        plan.infeasibility = fmt::format(
            "SOC floor {} kWh unreachable at step {} (at most {} kWh)", p.soc_min, k, hi);
        return plan;
      }
      if (lo > p.capacity + kFeasTol) {
        plan.infeasibility = fmt::format("capacity {} kWh exceeded at step {}", p.capacity, k);
        return plan;
      }
      lo = std::max(lo, p.soc_min);
      hi = std::min(hi, p.capacity);
    } else if (p.soc_target < lo - kFeasTol || p.soc_target > hi + kFeasTol) {
      plan.infeasibility = fmt::format(
          "terminal target {} kWh unreachable after {} steps (reachable [{}, {}])", p.soc_target,
          horizon, lo, hi);
      return plan;
    }
  }

  // Shifted variables x_t = a_t + max_discharge >= 0.
  const double d = p.max_discharge;
  const Eigen::Index rows = horizon + 2 * (horizon - 1) + 1;
  LinearProgram lp;
  lp.a = Matrix::Zero(rows, horizon);
  lp.b = Vector::Zero(rows);
  lp.sense.resize(static_cast<std::size_t>(rows));
  lp.c = Eigen::Map<const Vector>(p.prices.data(), horizon);
  Eigen::Index r = 0;
  for (Eigen::Index t = 0; t < horizon; ++t, ++r) {
    lp.a(r, t) = 1.0;
    lp.b[r] = p.max_charge + d;
    lp.sense[static_cast<std::size_t>(r)] = ConstraintSense::LessEqual;
  }
  for (Eigen::Index k = 1; k < horizon; ++k) {
    const double shift = static_cast<double>(k) * d - p.initial_soc;
    lp.a.block(r, 0, 1, k).setOnes();
    lp.b[r] = p.capacity + shift;
    lp.sense[static_cast<std::size_t>(r++)] = ConstraintSense::LessEqual;
    lp.a.block(r, 0, 1, k).setOnes();
    lp.b[r] = p.soc_min + shift;
    lp.sense[static_cast<std::size_t>(r++)] = ConstraintSense::GreaterEqual;
  }
  lp.a.row(r).setOnes();
  lp.b[r] = p.soc_target + static_cast<double>(horizon) * d - p.initial_soc;
  lp.sense[static_cast<std::size_t>(r)] = ConstraintSense::Equal;

  const LpSolution sol = solve_lp(lp, true);
  if (sol.status != LpStatus::Optimal) {
    plan.infeasibility = "simplex phase 1 found no feasible schedule";
    return plan;
  }

  // Recover actions and land bound-touching SOC values exactly on the bound
  // so downstream cost accounting sees no roundoff violations.
  plan.schedule.resize(static_cast<std::size_t>(horizon));
  double soc = p.initial_soc;
  for (Eigen::Index t = 0; t < horizon; ++t) {
    double a = sol.x[t] - d;
    const double next = soc + a;
    if (t + 1 == horizon) {
      a = land_on(soc, p.soc_target);
    } else if (std::abs(next - p.soc_min) <= kFeasTol) {
      a = land_on(soc, p.soc_min);
    } else if (std::abs(next - p.capacity) <= kFeasTol) {
      a = land_on(soc, p.capacity);
    }
    plan.schedule[static_cast<std::size_t>(t)] = a;
    soc += a;
  }
  plan.feasible = true;
  plan.objective = 0.0;
  for (Eigen::Index t = 0; t < horizon; ++t) {
    plan.objective += p.prices[static_cast<std::size_t>(t)] * plan.schedule[static_cast<std::size_t>(t)];
  }
  return plan;
}

}  // namespace evsched

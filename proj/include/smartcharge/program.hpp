#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace smartcharge {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind {
  Energy,         // e_k(t)
  LogEpigraph,    // bounded above by tangent cuts of log(x + 1)
  PeakIncrease,   // ê_inc, kW
  SlotLoad,       // auxiliary: sum_k e_k(t)
  ScenarioTotal,  // auxiliary: e_k^T x_{k,n}
  Generic,
};

/// Slot loads and scenario totals are linking variables introduced for sparsity.
bool is_auxiliary(VarKind kind);

enum class Relation { LessEqual, GreaterEqual, Equal };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::Generic;
  double lower = -kInf;
  double upper = kInf;
};

struct LinearConstraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double bound = 0.0;

  double activity(std::span<const double> x) const;
  /// Amount by which x violates the row, 0 when satisfied.
  double violation(std::span<const double> x) const;
};

/// objective += value * x[a] * x[b]; a == b gives a square term.
struct QuadraticTerm {
  int a = 0;
  int b = 0;
  double value = 0.0;
};

/// objective += weight * log(x[var] + shift), with weight >= 0.
struct LogTerm {
  int var = 0;
  double weight = 0.0;
  double shift = 1.0;
};

/// A concave maximization over linear rows and variable bounds:
///   maximize  constant + lin' x + sum value * x_a * x_b + sum weight * log(x_v + shift)
/// The quadratic form must be negative semidefinite. A variable carrying a log
/// term needs a finite lower bound above -shift.
class ConvexProgram {
 public:
  int add_variable(std::string name, VarKind kind, double lower, double upper);
  void add_linear(int var, double coef);
  void add_quadratic(int a, int b, double value);
  void add_log(int var, double weight, double shift);
  void add_constant(double value) { constant_ += value; }
  int add_constraint(std::string name, std::vector<Term> terms, Relation relation, double bound);

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  std::size_t count_variables(VarKind kind) const;
  /// Variables that are not auxiliary linking variables.
  std::size_t num_decision_variables() const;
  std::size_t count_constraints_with_prefix(const std::string& prefix) const;

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const std::vector<double>& linear() const { return linear_; }
  const std::vector<QuadraticTerm>& quadratic() const { return quadratic_; }
  const std::vector<LogTerm>& log_terms() const { return log_terms_; }
  double constant() const { return constant_; }
  Variable& variable(int index) { return variables_.at(static_cast<std::size_t>(index)); }

  double objective_value(std::span<const double> x) const;
  /// Largest row or bound violation.
  double max_violation(std::span<const double> x) const;

  /// Throws Error(DimensionMismatch) when a row or term references an undeclared variable.
  void check_well_formed() const;
  /// True when the quadratic form is negative semidefinite within tol.
  bool is_concave(double tol = 1e-9) const;

  /// Plain-text listing: objective, one constraint per line as
  /// `name: coef var + coef var ... relation bound`, then bounds.
  void write_lp(std::ostream& out) const;

 private:
  std::vector<Variable> variables_;
  std::vector<double> linear_;
  std::vector<QuadraticTerm> quadratic_;
  std::vector<LinearConstraint> constraints_;
  std::vector<LogTerm> log_terms_;
  double constant_ = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, IterLimit };

const char* to_string(SolveStatus status);

struct Solution {
  std::vector<double> values;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::IterLimit;
  int iterations = 0;
  double solve_time = 0.0;  // seconds
  double max_violation = 0.0;
};

struct SolveOptions {
  double opt_tol = 1e-6;   // relative
  double feas_tol = 1e-6;  // absolute, in row units
  int max_iters = 10000;
};

/// Primal-dual interior point method (Mehrotra predictor-corrector) on the
/// quasi-definite KKT system. Log terms are handled by Newton linearization. Deterministic for a given program and options.
Solution solve(const ConvexProgram& program, const SolveOptions& options = {});

/// Exhaustive grid search over the variables that are not implied by others.
/// Auxiliary and epigraph variables are resolved exactly from the enumerated
/// ones. Each refinement pass re-grids a box of +-2 steps around the incumbent.
/// Small programs (up to 2e5 candidate active sets) are also searched exactly
/// by enumerating active sets and solving each stationarity system.
/// Throws Error(GridTooLarge) above 1e8 points per pass.
Solution brute_force_oracle(const ConvexProgram& program, int grid_points_per_var, int refinements = 0);

}  // namespace smartcharge

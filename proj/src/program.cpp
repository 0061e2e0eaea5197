#include "smartcharge/program.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "smartcharge/domain.hpp"

namespace smartcharge {

bool is_auxiliary(VarKind kind) { return kind == VarKind::SlotLoad || kind == VarKind::ScenarioTotal; }

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "Unknown";
}

double LinearConstraint::activity(std::span<const double> x) const {
  double a = 0.0;
  for (const auto& t : terms) a += t.coef * x[static_cast<std::size_t>(t.var)];
  return a;
}

double LinearConstraint::violation(std::span<const double> x) const {
  const double a = activity(x);
  switch (relation) {
    case Relation::LessEqual: return std::max(0.0, a - bound);
    case Relation::GreaterEqual: return std::max(0.0, bound - a);
    case Relation::Equal: return std::abs(a - bound);
  }
  return 0.0;
}

int ConvexProgram::add_variable(std::string name, VarKind kind, double lower, double upper) {
  variables_.push_back({std::move(name), kind, lower, upper});
  linear_.push_back(0.0);
  return static_cast<int>(variables_.size()) - 1;
}

void ConvexProgram::add_linear(int var, double coef) { linear_.at(static_cast<std::size_t>(var)) += coef; }

void ConvexProgram::add_quadratic(int a, int b, double value) {
  if (value == 0.0) return;
  if (a > b) std::swap(a, b);
  quadratic_.push_back({a, b, value});
}

void ConvexProgram::add_log(int var, double weight, double shift) {
  if (weight == 0.0) return;
  if (weight < 0.0) throw Error(ErrorKind::InvalidConfig, "log term weight must be nonnegative");
  log_terms_.push_back({var, weight, shift});
}

int ConvexProgram::add_constraint(std::string name, std::vector<Term> terms, Relation relation, double bound) {
  constraints_.push_back({std::move(name), std::move(terms), relation, bound});
  return static_cast<int>(constraints_.size()) - 1;
}

std::size_t ConvexProgram::count_variables(VarKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(variables_.begin(), variables_.end(), [&](const Variable& v) { return v.kind == kind; }));
}

std::size_t ConvexProgram::num_decision_variables() const {
  return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(),
                                                [](const Variable& v) { return !is_auxiliary(v.kind); }));
}

std::size_t ConvexProgram::count_constraints_with_prefix(const std::string& prefix) const {
  return static_cast<std::size_t>(std::count_if(constraints_.begin(), constraints_.end(), [&](const auto& c) {
    return c.name.compare(0, prefix.size(), prefix) == 0;
  }));
}

double ConvexProgram::objective_value(std::span<const double> x) const {
  double v = constant_;
  for (std::size_t j = 0; j < linear_.size(); ++j) v += linear_[j] * x[j];
  for (const auto& q : quadratic_) v += q.value * x[static_cast<std::size_t>(q.a)] * x[static_cast<std::size_t>(q.b)];
  for (const auto& l : log_terms_) v += l.weight * std::log(x[static_cast<std::size_t>(l.var)] + l.shift);
  return v;
}

double ConvexProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (const auto& c : constraints_) worst = std::max(worst, c.violation(x));
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    worst = std::max(worst, variables_[j].lower - x[j]);
    worst = std::max(worst, x[j] - variables_[j].upper);
  }
  return worst;
}

void ConvexProgram::check_well_formed() const {
  const int n = static_cast<int>(variables_.size());
  auto in_range = [n](int v) { return v >= 0 && v < n; };
  for (const auto& c : constraints_) {
    for (const auto& t : c.terms) {
      if (!in_range(t.var)) throw Error(ErrorKind::DimensionMismatch, "row " + c.name + " references unknown variable");
    }
  }
  for (const auto& q : quadratic_) {
    if (!in_range(q.a) || !in_range(q.b)) throw Error(ErrorKind::DimensionMismatch, "quadratic term out of range");
  }
  for (const auto& l : log_terms_) {
    if (!in_range(l.var)) throw Error(ErrorKind::DimensionMismatch, "log term out of range");
    if (!(variables_[static_cast<std::size_t>(l.var)].lower + l.shift > 0.0)) {
      throw Error(ErrorKind::InvalidConfig, "log term on " + variables_[static_cast<std::size_t>(l.var)].name +
                                                " needs lower bound above -shift");
    }
  }
}

bool ConvexProgram::is_concave(double tol) const {
  const auto n = static_cast<Eigen::Index>(variables_.size());
  if (n == 0) return true;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (const auto& q : quadratic_) {
    if (q.a == q.b) {
      h(q.a, q.a) += 2.0 * q.value;
    } else {
      h(q.a, q.b) += q.value;
      h(q.b, q.a) += q.value;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff() <= tol;
}

namespace {

const char* relation_symbol(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::GreaterEqual: return ">=";
    case Relation::Equal: return "=";
  }
  return "?";
}

}  // namespace

void ConvexProgram::write_lp(std::ostream& out) const {
  out << "maximize:";
  for (std::size_t j = 0; j < linear_.size(); ++j) {
    if (linear_[j] != 0.0) out << ' ' << linear_[j] << ' ' << variables_[j].name;
  }
  for (const auto& q : quadratic_) {
    out << ' ' << q.value << ' ' << variables_[static_cast<std::size_t>(q.a)].name << '*'
        << variables_[static_cast<std::size_t>(q.b)].name;
  }
  for (const auto& l : log_terms_) {
    out << ' ' << l.weight << " log(" << variables_[static_cast<std::size_t>(l.var)].name << " + " << l.shift << ')';
  }
  out << " + " << constant_ << '\n';
  out << "subject to:\n";
  for (const auto& c : constraints_) {
    out << c.name << ':';
    for (const auto& t : c.terms) out << ' ' << t.coef << ' ' << variables_[static_cast<std::size_t>(t.var)].name;
    out << ' ' << relation_symbol(c.relation) << ' ' << c.bound << '\n';
  }
  out << "bounds:\n";
  for (const auto& v : variables_) out << v.lower << " <= " << v.name << " <= " << v.upper << '\n';
}

}  // namespace smartcharge

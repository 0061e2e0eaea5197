#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "smartcharge/domain.hpp"
#include "smartcharge/program.hpp"

namespace smartcharge {

namespace {

constexpr double kGridFeasTol = 1e-9;

bool enumerated(VarKind kind) { return kind == VarKind::Energy || kind == VarKind::Generic; }

// How an implied variable gets its value from already-known ones.
struct Resolution {
  int var = 0;
  int equality_row = -1;       // solve this row for var
  std::vector<int> rows;       // inequality rows involving var
  double direction = 0.0;      // objective slope on var: push up (>0) or down (<=0)
};

double coef_of(const LinearConstraint& row, int var) {
  double c = 0.0;
  for (const auto& t : row.terms) {
    if (t.var == var) c += t.coef;
  }
  return c;
}

std::vector<Resolution> plan_resolution(const ConvexProgram& prog) {
  const auto& vars = prog.variables();
  const auto& rows = prog.constraints();
  std::vector<char> known(vars.size(), 0);
  std::vector<int> pending;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (enumerated(vars[j].kind)) {
      known[j] = 1;
    } else {
      pending.push_back(static_cast<int>(j));
    }
  }
  for (const auto& q : prog.quadratic()) {
    for (int v : {q.a, q.b}) {
      const VarKind kind = vars[static_cast<std::size_t>(v)].kind;
      if (!enumerated(kind) && !is_auxiliary(kind)) {
        throw Error(ErrorKind::InvalidConfig, "oracle: epigraph variable in quadratic objective");
      }
    }
  }
  auto others_known = [&](const LinearConstraint& row, int var) {
    return std::all_of(row.terms.begin(), row.terms.end(),
                       [&](const Term& t) { return t.var == var || known[static_cast<std::size_t>(t.var)]; });
  };
  std::vector<Resolution> plan;
  bool progress = true;
  while (!pending.empty() && progress) {
    progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      const int v = *it;
      Resolution res;
      res.var = v;
      bool ready = true;
      if (is_auxiliary(vars[static_cast<std::size_t>(v)].kind)) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].relation == Relation::Equal && coef_of(rows[r], v) != 0.0 && others_known(rows[r], v)) {
            res.equality_row = static_cast<int>(r);
            break;
          }
        }
        ready = res.equality_row >= 0;
      } else {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (coef_of(rows[r], v) == 0.0) continue;
          if (!others_known(rows[r], v)) {
            ready = false;
            break;
          }
          res.rows.push_back(static_cast<int>(r));
        }
        res.direction = prog.linear()[static_cast<std::size_t>(v)];
      }
      if (ready) {
        known[static_cast<std::size_t>(v)] = 1;
        plan.push_back(std::move(res));
        it = pending.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  if (!pending.empty()) throw Error(ErrorKind::InvalidConfig, "oracle: cannot resolve implied variables");
  return plan;
}

void resolve(const ConvexProgram& prog, const std::vector<Resolution>& plan, std::vector<double>& x) {
  const auto& rows = prog.constraints();
  for (const auto& res : plan) {
    const auto& var = prog.variables()[static_cast<std::size_t>(res.var)];
    if (res.equality_row >= 0) {
      const auto& row = rows[static_cast<std::size_t>(res.equality_row)];
      double rest = 0.0, self = 0.0;
      for (const auto& t : row.terms) {
        if (t.var == res.var) {
          self += t.coef;
        } else {
          rest += t.coef * x[static_cast<std::size_t>(t.var)];
        }
      }
      x[static_cast<std::size_t>(res.var)] = (row.bound - rest) / self;
      continue;
    }
    double lo = var.lower, hi = var.upper;
    for (int r : res.rows) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      double rest = 0.0, self = 0.0;
      for (const auto& t : row.terms) {
        if (t.var == res.var) {
          self += t.coef;
        } else {
          rest += t.coef * x[static_cast<std::size_t>(t.var)];
        }
      }
      const double limit = (row.bound - rest) / self;
      const bool upper = (row.relation == Relation::LessEqual) == (self > 0.0);
      if (row.relation == Relation::Equal) {
        lo = std::max(lo, limit);
        hi = std::min(hi, limit);
      } else if (upper) {
        hi = std::min(hi, limit);
      } else {
        lo = std::max(lo, limit);
      }
    }
    double value = res.direction > 0.0 ? hi : lo;
    if (!std::isfinite(value)) value = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
    x[static_cast<std::size_t>(res.var)] = value;
  }
}

// One side of a row or bound that may be active at the optimum.
struct Face {
  std::vector<Term> terms;
  double bound = 0.0;
};

constexpr double kMaxFaceSubsets = 2e5;

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Exhaustive search over active sets: every subset of at most n inequality
// faces (plus all equality rows) whose stationarity system is nonsingular
// yields a candidate point. Returns false when the enumeration is too large.
bool enumerate_active_sets(const ConvexProgram& prog, Solution& best) {
  const auto& vars = prog.variables();
  const int n = static_cast<int>(vars.size());
  if (!prog.log_terms().empty()) return false;
  std::vector<Face> equalities, faces;
  for (const auto& row : prog.constraints()) {
    if (row.relation == Relation::Equal) {
      equalities.push_back({row.terms, row.bound});
    } else {
      faces.push_back({row.terms, row.bound});
    }
  }
  for (int j = 0; j < n; ++j) {
    const auto& v = vars[static_cast<std::size_t>(j)];
    if (v.lower == v.upper) {
      equalities.push_back({{{j, 1.0}}, v.lower});
      continue;
    }
    if (std::isfinite(v.lower)) faces.push_back({{{j, 1.0}}, v.lower});
    if (std::isfinite(v.upper)) faces.push_back({{{j, 1.0}}, v.upper});
  }
  const int free_dims = n - static_cast<int>(equalities.size());
  if (free_dims < 0) return true;
  const int num_faces = static_cast<int>(faces.size());
  double total = 0.0;
  for (int k = 0; k <= std::min(free_dims, num_faces); ++k) total += binomial(num_faces, k);
  if (total > kMaxFaceSubsets) return false;

  Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(n, n);
  for (const auto& q : prog.quadratic()) {
    hessian(q.a, q.b) += q.value;
    hessian(q.b, q.a) += q.value;
  }
  Eigen::VectorXd gradient(n);
  for (int j = 0; j < n; ++j) gradient(j) = prog.linear()[static_cast<std::size_t>(j)];

  std::vector<int> chosen;
  auto evaluate = [&] {
    const int m = static_cast<int>(equalities.size() + chosen.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
    kkt.topLeftCorner(n, n) = hessian;
    rhs.head(n) = -gradient;
    auto put = [&](int r, const Face& f) {
      for (const auto& t : f.terms) {
        kkt(n + r, t.var) += t.coef;
        kkt(t.var, n + r) -= t.coef;
      }
      rhs(n + r) = f.bound;
    };
    int r = 0;
    for (const auto& f : equalities) put(r++, f);
    for (int c : chosen) put(r++, faces[static_cast<std::size_t>(c)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd sol = lu.solve(rhs);
    std::vector<double> x(sol.data(), sol.data() + n);
    if (prog.max_violation(x) > kGridFeasTol) return;
    const double f = prog.objective_value(x);
    if (f > best.objective_value) {
      best.objective_value = f;
      best.values = std::move(x);
      best.status = SolveStatus::Optimal;
    }
  };
  auto recurse = [&](auto&& self, int next) -> void {
    evaluate();
    if (static_cast<int>(chosen.size()) == free_dims) return;
    for (int c = next; c < num_faces; ++c) {
      chosen.push_back(c);
      self(self, c + 1);
      chosen.pop_back();
    }
  };
  recurse(recurse, 0);
  return true;
}

}  // namespace

Solution brute_force_oracle(const ConvexProgram& program, int grid_points_per_var, int refinements) {
  const auto start = std::chrono::steady_clock::now();
  program.check_well_formed();
  if (grid_points_per_var < 2) throw Error(ErrorKind::InvalidConfig, "oracle needs at least 2 points per variable");
  const auto& vars = program.variables();
  std::vector<int> grid_vars;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (enumerated(vars[j].kind)) grid_vars.push_back(static_cast<int>(j));
  }
  const double points = std::pow(static_cast<double>(grid_points_per_var), static_cast<double>(grid_vars.size()));
  if (points > 1e8) throw Error(ErrorKind::GridTooLarge, "oracle grid exceeds 1e8 points");
  for (int j : grid_vars) {
    const auto& v = vars[static_cast<std::size_t>(j)];
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
      throw Error(ErrorKind::InvalidConfig, "oracle needs finite bounds on enumerated variable " + v.name);
    }
  }
  const auto plan = plan_resolution(program);

  Solution best;
  best.status = SolveStatus::Infeasible;
  best.objective_value = -std::numeric_limits<double>::infinity();

  const std::size_t m = grid_vars.size();
  std::vector<double> center(m), half(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& v = vars[static_cast<std::size_t>(grid_vars[k])];
    center[k] = 0.5 * (v.lower + v.upper);
    half[k] = 0.5 * (v.upper - v.lower);
  }
  std::vector<double> x(vars.size(), 0.0);
  std::vector<int> idx(m, 0), best_idx(m, 0);
  int shrinks = 0;
  const int max_passes = 1 + 4 * refinements;
  for (int pass = 0; pass < max_passes && shrinks <= refinements; ++pass) {
    std::vector<double> lo(m), step(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& v = vars[static_cast<std::size_t>(grid_vars[k])];
      const double a = std::max(v.lower, center[k] - half[k]);
      const double b = std::min(v.upper, center[k] + half[k]);
      lo[k] = a;
      step[k] = (b - a) / (grid_points_per_var - 1);
    }
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (std::size_t k = 0; k < m; ++k) {
        x[static_cast<std::size_t>(grid_vars[k])] = lo[k] + step[k] * idx[k];
      }
      resolve(program, plan, x);
      if (program.max_violation(x) <= kGridFeasTol) {
        const double f = program.objective_value(x);
        if (f > best.objective_value) {
          best.objective_value = f;
          best.values = x;
          best.status = SolveStatus::Optimal;
          best_idx = idx;
        }
      }
      std::size_t k = 0;
      while (k < m && ++idx[k] == grid_points_per_var) idx[k++] = 0;
      if (k == m) break;
    }
    ++best.iterations;
    if (best.status != SolveStatus::Optimal) break;
    // An incumbent on the window edge means the optimum may lie outside it:
    // recentre without shrinking. Otherwise shrink to +-2 steps.
    bool on_edge = false;
    for (std::size_t k = 0; k < m; ++k) {
      const auto& v = vars[static_cast<std::size_t>(grid_vars[k])];
      const double value = best.values[static_cast<std::size_t>(grid_vars[k])];
      const bool at_low = best_idx[k] == 0 && value > v.lower;
      const bool at_high = best_idx[k] == grid_points_per_var - 1 && value < v.upper;
      on_edge = on_edge || ((at_low || at_high) && pass > 0);
    }
    for (std::size_t k = 0; k < m; ++k) {
      center[k] = best.values[static_cast<std::size_t>(grid_vars[k])];
      if (!on_edge) half[k] = 2.0 * step[k];
    }
    if (!on_edge) ++shrinks;
    // best_idx only refers to this pass's grid
    std::fill(best_idx.begin(), best_idx.end(), grid_points_per_var / 2);
  }
  enumerate_active_sets(program, best);
  if (best.status == SolveStatus::Optimal) {
    best.max_violation = program.max_violation(best.values);
  } else {
    best.values.assign(vars.size(), 0.0);
    best.objective_value = 0.0;
  }
  best.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return best;
}

}  // namespace smartcharge

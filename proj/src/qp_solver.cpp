#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "smartcharge/program.hpp"

namespace smartcharge {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double, int>;

constexpr double kPrimalReg = 1e-9;
constexpr double kDualReg = 1e-9;
constexpr double kStepFraction = 0.99;

// Minimization form over the non-fixed variables:
//   minimize 1/2 x'Px + c'x  s.t.  A x = b,  G x <= h,  lo <= x <= hi
// Rows are scaled to unit max coefficient, the objective by its largest coefficient.
struct StandardForm {
  int n = 0;
  std::vector<int> full_index;
  std::vector<double> fixed_values;  // full length; used for fixed variables
  Vec lo, hi, c;
  SpMat p;  // full symmetric
  Vec p_diag;
  SpMat a, g;
  Vec b, h;
  Vec a_norm, g_norm;  // original row magnitudes, to report residuals in row units
  struct Log {
    int k = 0;
    double weight = 0.0;  // already multiplied by obj_scale
    double shift = 1.0;
  };
  std::vector<Log> logs;  // minimized as -weight * log(x_k + shift)
  double obj_scale = 1.0;
  bool infeasible = false;
};

StandardForm to_standard_form(const ConvexProgram& prog, double feas_tol) {
  StandardForm sf;
  const auto& vars = prog.variables();
  const std::size_t n_full = vars.size();
  sf.fixed_values.assign(n_full, 0.0);
  std::vector<int> free_of(n_full, -1);
  for (std::size_t j = 0; j < n_full; ++j) {
    const auto& v = vars[j];
    if (v.lower > v.upper + feas_tol) {
      sf.infeasible = true;
    }
    if (std::isfinite(v.lower) && std::isfinite(v.upper) && v.upper - v.lower <= 1e-12) {
      sf.fixed_values[j] = 0.5 * (v.lower + v.upper);
    } else if (v.lower <= v.upper) {
      free_of[j] = sf.n++;
      sf.full_index.push_back(static_cast<int>(j));
    }
  }
  const int n = sf.n;
  sf.lo.resize(n);
  sf.hi.resize(n);
  sf.c = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    const auto& v = vars[static_cast<std::size_t>(sf.full_index[static_cast<std::size_t>(k)])];
    sf.lo[k] = v.lower;
    sf.hi[k] = v.upper;
    sf.c[k] = -prog.linear()[static_cast<std::size_t>(sf.full_index[static_cast<std::size_t>(k)])];
  }

  std::vector<Triplet> p_trip;
  for (const auto& q : prog.quadratic()) {
    const int fa = free_of[static_cast<std::size_t>(q.a)];
    const int fb = free_of[static_cast<std::size_t>(q.b)];
    if (fa >= 0 && fb >= 0) {
      if (fa == fb) {
        p_trip.emplace_back(fa, fa, -2.0 * q.value);
      } else {
        p_trip.emplace_back(fa, fb, -q.value);
        p_trip.emplace_back(fb, fa, -q.value);
      }
    } else if (fa >= 0) {
      sf.c[fa] += -q.value * sf.fixed_values[static_cast<std::size_t>(q.b)];
    } else if (fb >= 0) {
      sf.c[fb] += -q.value * sf.fixed_values[static_cast<std::size_t>(q.a)];
    }
  }
  sf.p.resize(n, n);
  sf.p.setFromTriplets(p_trip.begin(), p_trip.end());
  sf.p_diag = sf.p.diagonal();

  std::vector<Triplet> a_trip, g_trip;
  std::vector<double> b, h, a_norm, g_norm;
  for (const auto& row : prog.constraints()) {
    std::map<int, double> merged;
    double rhs = row.bound;
    for (const auto& t : row.terms) {
      const int f = free_of[static_cast<std::size_t>(t.var)];
      if (f >= 0) {
        merged[f] += t.coef;
      } else {
        rhs -= t.coef * sf.fixed_values[static_cast<std::size_t>(t.var)];
      }
    }
    double norm = 0.0;
    for (const auto& [k, v] : merged) norm = std::max(norm, std::abs(v));
    if (norm == 0.0) {
      const bool ok = (row.relation == Relation::LessEqual && 0.0 <= rhs + feas_tol) ||
                      (row.relation == Relation::GreaterEqual && 0.0 >= rhs - feas_tol) ||
                      (row.relation == Relation::Equal && std::abs(rhs) <= feas_tol);
      if (!ok) sf.infeasible = true;
      continue;
    }
    const double sign = row.relation == Relation::GreaterEqual ? -1.0 : 1.0;
    const double scale = sign / norm;
    if (row.relation == Relation::Equal) {
      const int r = static_cast<int>(b.size());
      for (const auto& [k, v] : merged) a_trip.emplace_back(r, k, v * scale);
      b.push_back(rhs * scale);
      a_norm.push_back(norm);
    } else {
      const int r = static_cast<int>(h.size());
      for (const auto& [k, v] : merged) g_trip.emplace_back(r, k, v * scale);
      h.push_back(rhs * scale);
      g_norm.push_back(norm);
    }
  }
  sf.a.resize(static_cast<int>(b.size()), n);
  sf.a.setFromTriplets(a_trip.begin(), a_trip.end());
  sf.g.resize(static_cast<int>(h.size()), n);
  sf.g.setFromTriplets(g_trip.begin(), g_trip.end());
  sf.b = Eigen::Map<Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
  sf.h = Eigen::Map<Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
  sf.a_norm = Eigen::Map<Vec>(a_norm.data(), static_cast<Eigen::Index>(a_norm.size()));
  sf.g_norm = Eigen::Map<Vec>(g_norm.data(), static_cast<Eigen::Index>(g_norm.size()));

  double big = 0.0;
  for (int k = 0; k < sf.p.outerSize(); ++k) {
    for (SpMat::InnerIterator it(sf.p, k); it; ++it) big = std::max(big, std::abs(it.value()));
  }
  if (n > 0) big = std::max(big, sf.c.cwiseAbs().maxCoeff());
  for (const auto& l : prog.log_terms()) {
    const int f = free_of[static_cast<std::size_t>(l.var)];
    if (f < 0) continue;
    sf.logs.push_back({f, l.weight, l.shift});
    big = std::max(big, l.weight / (sf.lo[f] + l.shift));
  }
  sf.obj_scale = big > 0.0 ? 1.0 / big : 1.0;
  for (auto& l : sf.logs) l.weight *= sf.obj_scale;
  sf.p *= sf.obj_scale;
  sf.p_diag *= sf.obj_scale;
  sf.c *= sf.obj_scale;
  return sf;
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Largest alpha in (0, 1] keeping v + alpha * dv >= 0 on the masked entries.
double max_step(const Vec& v, const Vec& dv, const std::vector<char>* mask = nullptr) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[static_cast<std::size_t>(i)]) continue;
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

class InteriorPoint {
 public:
  InteriorPoint(const StandardForm& sf, const SolveOptions& opt) : sf_(sf), opt_(opt) {}

  SolveStatus run(Vec& x, int& iterations) {
    init();
    assemble_kkt();
    SolveStatus status = SolveStatus::IterLimit;
    int stalled = 0;
    for (iterations = 0; iterations < opt_.max_iters; ++iterations) {
      residuals();
      if (converged()) {
        status = SolveStatus::Optimal;
        break;
      }
      if (infeasibility_certificate()) {
        status = SolveStatus::Infeasible;
        break;
      }
      if (!newton_step()) break;
      stalled = last_alpha_ < 1e-10 ? stalled + 1 : 0;
      if (stalled >= 5) break;
    }
    x = x_;
    return status;
  }

 private:
  void init() {
    const int n = sf_.n;
    x_.resize(n);
    has_lo_.assign(static_cast<std::size_t>(n), 0);
    has_hi_.assign(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
      const double lo = sf_.lo[j];
      const double hi = sf_.hi[j];
      has_lo_[static_cast<std::size_t>(j)] = std::isfinite(lo);
      has_hi_[static_cast<std::size_t>(j)] = std::isfinite(hi);
      if (std::isfinite(lo) && std::isfinite(hi)) {
        x_[j] = lo + 0.5 * (hi - lo);
      } else if (std::isfinite(lo)) {
        x_[j] = std::max(lo + 1.0, 0.0);
      } else if (std::isfinite(hi)) {
        x_[j] = std::min(hi - 1.0, 0.0);
      } else {
        x_[j] = 0.0;
      }
    }
    y_ = Vec::Zero(sf_.a.rows());
    const Vec gx = sf_.g * x_;
    s_ = (sf_.h - gx).cwiseMax(1.0);
    z_ = Vec::Ones(sf_.g.rows());
    zl_ = Vec::Zero(n);
    zu_ = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (has_lo_[static_cast<std::size_t>(j)]) zl_[j] = 1.0;
      if (has_hi_[static_cast<std::size_t>(j)]) zu_[j] = 1.0;
    }
    ncomp_ = static_cast<int>(sf_.g.rows());
    for (int j = 0; j < n; ++j) ncomp_ += has_lo_[static_cast<std::size_t>(j)] + has_hi_[static_cast<std::size_t>(j)];
  }

  void assemble_kkt() {
    const int n = sf_.n;
    const int me = static_cast<int>(sf_.a.rows());
    const int mi = static_cast<int>(sf_.g.rows());
    dim_ = n + me + mi;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(dim_ + sf_.p.nonZeros() + sf_.a.nonZeros() + sf_.g.nonZeros()));
    for (int j = 0; j < dim_; ++j) trip.emplace_back(j, j, 0.0);
    for (int k = 0; k < sf_.p.outerSize(); ++k) {
      for (SpMat::InnerIterator it(sf_.p, k); it; ++it) {
        if (it.row() > it.col()) trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      }
    }
    for (int k = 0; k < sf_.a.outerSize(); ++k) {
      for (SpMat::InnerIterator it(sf_.a, k); it; ++it) {
        trip.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      }
    }
    for (int k = 0; k < sf_.g.outerSize(); ++k) {
      for (SpMat::InnerIterator it(sf_.g, k); it; ++it) {
        trip.emplace_back(n + me + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
      }
    }
    kkt_.resize(dim_, dim_);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    kkt_.makeCompressed();
    diag_pos_.resize(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) {
      diag_pos_[static_cast<std::size_t>(j)] = kkt_.outerIndexPtr()[j];  // lower part: diagonal leads each column
    }
    reg_ = Vec::Zero(dim_);
    reg_.head(n).setConstant(kPrimalReg);
    reg_.tail(me + mi).setConstant(-kDualReg);
    ldlt_.analyzePattern(kkt_);
  }

  void residuals() {
    const int n = sf_.n;
    rd_ = sf_.p * x_ + sf_.c - zl_ + zu_;
    for (const auto& l : sf_.logs) rd_[l.k] -= l.weight / (x_[l.k] + l.shift);
    if (sf_.a.rows() > 0) rd_ += sf_.a.transpose() * y_;
    if (sf_.g.rows() > 0) rd_ += sf_.g.transpose() * z_;
    rp_ = sf_.a * x_ - sf_.b;
    rg_ = sf_.g * x_ + s_ - sf_.h;
    wl_ = Vec::Ones(n);
    wu_ = Vec::Ones(n);
    for (int j = 0; j < n; ++j) {
      if (has_lo_[static_cast<std::size_t>(j)]) wl_[j] = x_[j] - sf_.lo[j];
      if (has_hi_[static_cast<std::size_t>(j)]) wu_[j] = sf_.hi[j] - x_[j];
    }
    gap_ = s_.dot(z_) + wl_.dot(zl_) + wu_.dot(zu_);
    mu_ = ncomp_ > 0 ? gap_ / ncomp_ : 0.0;
  }

  bool converged() const {
    double pres = 0.0;
    for (Eigen::Index r = 0; r < rp_.size(); ++r) pres = std::max(pres, std::abs(rp_[r]) * sf_.a_norm[r]);
    for (Eigen::Index r = 0; r < rg_.size(); ++r) pres = std::max(pres, std::abs(rg_[r]) * sf_.g_norm[r]);
    double pobj = 0.5 * x_.dot(sf_.p * x_) + sf_.c.dot(x_);
    for (const auto& l : sf_.logs) pobj -= l.weight * std::log(x_[l.k] + l.shift);
    const double dres = inf_norm(rd_);
    return pres <= 0.1 * opt_.feas_tol && dres <= opt_.opt_tol * (1.0 + inf_norm(sf_.c)) &&
           gap_ <= opt_.opt_tol * std::max(1.0, std::abs(pobj));
  }

  // Farkas ray: A'y + G'z - zl + zu ~ 0 with b'y + h'z - lo'zl + hi'zu < 0.
  bool infeasibility_certificate() const {
    const double scale = std::max({inf_norm(y_), inf_norm(z_), inf_norm(zl_), inf_norm(zu_)});
    if (scale < 1e6) return false;
    Vec ray = zu_ - zl_;
    if (sf_.a.rows() > 0) ray += sf_.a.transpose() * y_;
    if (sf_.g.rows() > 0) ray += sf_.g.transpose() * z_;
    double t = sf_.b.dot(y_) + sf_.h.dot(z_);
    for (int j = 0; j < sf_.n; ++j) {
      if (has_lo_[static_cast<std::size_t>(j)]) t -= sf_.lo[j] * zl_[j];
      if (has_hi_[static_cast<std::size_t>(j)]) t += sf_.hi[j] * zu_[j];
    }
    return t < -1e-6 * scale && inf_norm(ray) <= 1e-6 * std::abs(t);
  }

  bool factorize() {
    const int n = sf_.n;
    const int me = static_cast<int>(sf_.a.rows());
    double* values = kkt_.valuePtr();
    for (int j = 0; j < n; ++j) {
      double d = sf_.p_diag[j] + kPrimalReg;
      if (has_lo_[static_cast<std::size_t>(j)]) d += zl_[j] / wl_[j];
      if (has_hi_[static_cast<std::size_t>(j)]) d += zu_[j] / wu_[j];
      values[diag_pos_[static_cast<std::size_t>(j)]] = d;
    }
    for (const auto& l : sf_.logs) {
      const double u = x_[l.k] + l.shift;
      values[diag_pos_[static_cast<std::size_t>(l.k)]] += l.weight / (u * u);
    }
    for (int r = 0; r < me; ++r) values[diag_pos_[static_cast<std::size_t>(n + r)]] = -kDualReg;
    for (Eigen::Index r = 0; r < s_.size(); ++r) {
      values[diag_pos_[static_cast<std::size_t>(n + me + r)]] = -s_[r] / z_[r] - kDualReg;
    }
    ldlt_.factorize(kkt_);
    return ldlt_.info() == Eigen::Success;
  }

  Vec solve_kkt(const Vec& rhs) const {
    Vec sol = ldlt_.solve(rhs);
    for (int pass = 0; pass < 3; ++pass) {
      const Vec kv = kkt_.selfadjointView<Eigen::Lower>() * sol - reg_.cwiseProduct(sol);
      const Vec res = rhs - kv;
      if (inf_norm(res) <= 1e-14 * std::max(1.0, inf_norm(rhs))) break;
      sol += ldlt_.solve(res);
    }
    return sol;
  }

  struct Direction {
    Vec dx, dy, dz, ds, dzl, dzu;
  };

  // r_sz, r_l, r_u are the complementarity residual targets.
  Direction direction(const Vec& r_sz, const Vec& r_l, const Vec& r_u) const {
    const int n = sf_.n;
    const int me = static_cast<int>(sf_.a.rows());
    const int mi = static_cast<int>(sf_.g.rows());
    Vec rhs(dim_);
    for (int j = 0; j < n; ++j) {
      double v = -rd_[j];
      if (has_lo_[static_cast<std::size_t>(j)]) v -= r_l[j] / wl_[j];
      if (has_hi_[static_cast<std::size_t>(j)]) v += r_u[j] / wu_[j];
      rhs[j] = v;
    }
    rhs.segment(n, me) = -rp_;
    for (int r = 0; r < mi; ++r) rhs[n + me + r] = -rg_[r] + r_sz[r] / z_[r];
    const Vec sol = solve_kkt(rhs);
    Direction d;
    d.dx = sol.head(n);
    d.dy = sol.segment(n, me);
    d.dz = sol.tail(mi);
    d.ds = -rg_ - sf_.g * d.dx;
    d.dzl = Vec::Zero(n);
    d.dzu = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (has_lo_[static_cast<std::size_t>(j)]) d.dzl[j] = (-r_l[j] - zl_[j] * d.dx[j]) / wl_[j];
      if (has_hi_[static_cast<std::size_t>(j)]) d.dzu[j] = (-r_u[j] + zu_[j] * d.dx[j]) / wu_[j];
    }
    return d;
  }

  double step_length(const Direction& d) const {
    double alpha = std::min(max_step(s_, d.ds), max_step(z_, d.dz));
    alpha = std::min(alpha, max_step(wl_, d.dx, &has_lo_));
    alpha = std::min(alpha, max_step(wu_, -d.dx, &has_hi_));
    alpha = std::min(alpha, max_step(zl_, d.dzl, &has_lo_));
    alpha = std::min(alpha, max_step(zu_, d.dzu, &has_hi_));
    return alpha;
  }

  bool newton_step() {
    if (!factorize()) return false;
    const int n = sf_.n;
    Vec r_sz = s_.cwiseProduct(z_);
    Vec r_l = Vec::Zero(n), r_u = Vec::Zero(n);
    for (int j = 0; j < n; ++j) {
      if (has_lo_[static_cast<std::size_t>(j)]) r_l[j] = wl_[j] * zl_[j];
      if (has_hi_[static_cast<std::size_t>(j)]) r_u[j] = wu_[j] * zu_[j];
    }
    const Direction aff = direction(r_sz, r_l, r_u);
    const double alpha_aff = step_length(aff);

    double sigma = 0.0;
    if (ncomp_ > 0 && mu_ > 0.0) {
      double gap_aff = (s_ + alpha_aff * aff.ds).dot(z_ + alpha_aff * aff.dz);
      for (int j = 0; j < n; ++j) {
        if (has_lo_[static_cast<std::size_t>(j)]) {
          gap_aff += (wl_[j] + alpha_aff * aff.dx[j]) * (zl_[j] + alpha_aff * aff.dzl[j]);
        }
        if (has_hi_[static_cast<std::size_t>(j)]) {
          gap_aff += (wu_[j] - alpha_aff * aff.dx[j]) * (zu_[j] + alpha_aff * aff.dzu[j]);
        }
      }
      const double ratio = std::max(0.0, gap_aff / ncomp_) / mu_;
      sigma = std::min(1.0, ratio * ratio * ratio);
    }
    const double target = sigma * mu_;
    r_sz += aff.ds.cwiseProduct(aff.dz);
    r_sz.array() -= target;
    for (int j = 0; j < n; ++j) {
      if (has_lo_[static_cast<std::size_t>(j)]) r_l[j] += aff.dx[j] * aff.dzl[j] - target;
      if (has_hi_[static_cast<std::size_t>(j)]) r_u[j] += -aff.dx[j] * aff.dzu[j] - target;
    }
    const Direction d = direction(r_sz, r_l, r_u);
    const double alpha = std::min(1.0, kStepFraction * step_length(d));
    last_alpha_ = alpha;
    x_ += alpha * d.dx;
    y_ += alpha * d.dy;
    z_ += alpha * d.dz;
    s_ += alpha * d.ds;
    zl_ += alpha * d.dzl;
    zu_ += alpha * d.dzu;
    // keep strictly interior against roundoff
    for (int j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (has_lo_[ju] && x_[j] <= sf_.lo[j]) x_[j] = sf_.lo[j] + 1e-14 * (1.0 + std::abs(sf_.lo[j]));
      if (has_hi_[ju] && x_[j] >= sf_.hi[j]) x_[j] = sf_.hi[j] - 1e-14 * (1.0 + std::abs(sf_.hi[j]));
    }
    s_ = s_.cwiseMax(1e-300);
    z_ = z_.cwiseMax(1e-300);
    return true;
  }

  const StandardForm& sf_;
  const SolveOptions& opt_;
  Vec x_, y_, z_, s_, zl_, zu_;
  Vec rd_, rp_, rg_, wl_, wu_;
  std::vector<char> has_lo_, has_hi_;
  int ncomp_ = 0;
  double gap_ = 0.0, mu_ = 0.0, last_alpha_ = 1.0;
  int dim_ = 0;
  SpMat kkt_;
  std::vector<int> diag_pos_;
  Vec reg_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace

Solution solve(const ConvexProgram& program, const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  program.check_well_formed();
  Solution sol;
  const StandardForm sf = to_standard_form(program, options.feas_tol);
  std::vector<double> full = sf.fixed_values;
  if (sf.infeasible) {
    sol.status = SolveStatus::Infeasible;
  } else if (sf.n == 0) {
    sol.status = SolveStatus::Optimal;
  } else {
    Vec x;
    InteriorPoint ipm(sf, options);
    sol.status = ipm.run(x, sol.iterations);
    for (int k = 0; k < sf.n; ++k) full[static_cast<std::size_t>(sf.full_index[static_cast<std::size_t>(k)])] = x[k];
  }
  sol.values = std::move(full);
  sol.objective_value = program.objective_value(sol.values);
  sol.max_violation = program.max_violation(sol.values);
  if (sol.status == SolveStatus::Optimal && sol.max_violation > options.feas_tol) sol.status = SolveStatus::IterLimit;
  sol.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace smartcharge

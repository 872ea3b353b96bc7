#include "v2sim/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "v2sim/error.hpp"

namespace v2sim::socp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEqRhoFactor = 1e3;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Vec col_inf_norms(const SpMat& M) {
  Vec out = Vec::Zero(M.cols());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      out[it.col()] = std::max(out[it.col()], std::abs(it.value()));
  return out;
}

Vec row_inf_norms(const SpMat& M) {
  Vec out = Vec::Zero(M.rows());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
  return out;
}

void project_soc(double* z, int len) {
  double nu = 0.0;
  for (int i = 1; i < len; ++i) nu += z[i] * z[i];
  nu = std::sqrt(nu);
  const double t = z[0];
  if (nu <= t) return;
  if (nu <= -t) {
    std::fill(z, z + len, 0.0);
    return;
  }
  const double a = 0.5 * (nu + t);
  z[0] = a;
  const double s = a / nu;
  for (int i = 1; i < len; ++i) z[i] *= s;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::Solved: return "solved";
    case Status::MaxIterations: return "max_iterations";
    case Status::PrimalInfeasible: return "primal_infeasible";
  }
  return "?";
}

Solver::Solver(Problem p, Settings s) : prob_(std::move(p)), set_(s), rho_base_(s.rho) {
  const int n = static_cast<int>(prob_.A.cols());
  const int m = static_cast<int>(prob_.A.rows());
  int cone_rows = 0;
  for (int k : prob_.soc) cone_rows += k;
  if (prob_.P.rows() != n || prob_.P.cols() != n || prob_.q.size() != n ||
      prob_.n_eq + prob_.n_box + cone_rows != m || prob_.b.size() != prob_.n_eq ||
      prob_.lo.size() != prob_.n_box || prob_.hi.size() != prob_.n_box)
    throw Error("socp: inconsistent problem dimensions");
  prob_.P.makeCompressed();
  prob_.A.makeCompressed();
  equilibrate();
  set_rho();
  factor();
  reset_iterate();
}

// Equality rows and box rows pinned to a single value get the stiffer rho.
void Solver::set_rho() {
  rho_ = Vec::Constant(prob_.A.rows(), rho_base_);
  rho_.head(prob_.n_eq).array() *= kEqRhoFactor;
  for (int i = 0; i < prob_.n_box; ++i)
    if (pinned_[i]) rho_[prob_.n_eq + i] *= kEqRhoFactor;
}

void Solver::equilibrate() {
  const int n = static_cast<int>(prob_.A.cols());
  const int m = static_cast<int>(prob_.A.rows());
  Ps_ = prob_.P;
  As_ = prob_.A;
  D_ = Vec::Ones(n);
  E_ = Vec::Ones(m);
  auto clamp_norm = [](double v) { return v < 1e-4 ? 1.0 : std::min(v, 1e4); };
  for (int it = 0; it < set_.scaling_iters; ++it) {
    Vec dn = col_inf_norms(Ps_).cwiseMax(col_inf_norms(As_));
    Vec en = row_inf_norms(As_);
    for (int j = 0; j < n; ++j) dn[j] = 1.0 / std::sqrt(clamp_norm(dn[j]));
    for (int i = 0; i < m; ++i) en[i] = 1.0 / std::sqrt(clamp_norm(en[i]));
    int r = prob_.n_eq + prob_.n_box;
    for (int len : prob_.soc) {
      double logsum = 0.0;
      for (int i = 0; i < len; ++i) logsum += std::log(en[r + i]);
      en.segment(r, len).setConstant(std::exp(logsum / len));
      r += len;
    }
    Ps_ = dn.asDiagonal() * Ps_ * dn.asDiagonal();
    As_ = en.asDiagonal() * As_ * dn.asDiagonal();
    D_ = D_.cwiseProduct(dn);
    E_ = E_.cwiseProduct(en);
  }
  qs_ = D_.cwiseProduct(prob_.q);
  const Vec pn = col_inf_norms(Ps_);
  const double pmean = n ? pn.mean() : 0.0;
  c_ = 1.0 / clamp_norm(std::max(pmean, inf_norm(qs_)));
  Ps_ *= c_;
  qs_ *= c_;
  AsT_ = As_.transpose();
  update_rhs(prob_.b, prob_.lo, prob_.hi);
}

void Solver::update_rhs(const Vec& b, const Vec& lo, const Vec& hi) {
  if (b.size() != prob_.n_eq || lo.size() != prob_.n_box || hi.size() != prob_.n_box)
    throw Error("socp: bound vector size mismatch");
  prob_.b = b;
  prob_.lo = lo;
  prob_.hi = hi;
  bs_ = E_.head(prob_.n_eq).cwiseProduct(b);
  const Vec e = E_.segment(prob_.n_eq, prob_.n_box);
  los_ = lo;
  his_ = hi;
  for (int i = 0; i < prob_.n_box; ++i) {
    if (std::isfinite(lo[i])) los_[i] = lo[i] * e[i];
    if (std::isfinite(hi[i])) his_[i] = hi[i] * e[i];
  }
  std::vector<char> pinned(prob_.n_box);
  for (int i = 0; i < prob_.n_box; ++i)
    pinned[i] = std::isfinite(lo[i]) && std::isfinite(hi[i]) && hi[i] - lo[i] <= 1e-12 * std::max(1.0, std::abs(lo[i]));
  if (pinned != pinned_) {
    pinned_ = std::move(pinned);
    refactor_ = true;
  }
}

void Solver::update_q(const Vec& q) {
  if (q.size() != prob_.q.size()) throw Error("socp: cost vector size mismatch");
  prob_.q = q;
  qs_ = c_ * D_.cwiseProduct(q);
}

void Solver::reset_iterate() {
  x_ = Vec::Zero(prob_.A.cols());
  z_ = Vec::Zero(prob_.A.rows());
  y_ = Vec::Zero(prob_.A.rows());
}

void Solver::factor() {
  const int n = static_cast<int>(prob_.A.cols());
  SpMat I(n, n);
  I.setIdentity();
  SpMat K = Ps_ + set_.sigma * I + SpMat(AsT_ * rho_.asDiagonal() * As_);
  if (factorizations_ == 0)
    ldlt_.analyzePattern(K);
  ldlt_.factorize(K);
  refactor_ = false;
  if (ldlt_.info() != Eigen::Success) throw Error("socp: KKT factorization failed");
  ++factorizations_;
}

void Solver::project(Vec& z) const {
  for (int i = 0; i < prob_.n_eq; ++i) z[i] = bs_[i];
  for (int i = 0; i < prob_.n_box; ++i) {
    double& v = z[prob_.n_eq + i];
    v = std::clamp(v, los_[i], his_[i]);
  }
  int r = prob_.n_eq + prob_.n_box;
  for (int len : prob_.soc) {
    project_soc(z.data() + r, len);
    r += len;
  }
}

bool Solver::certify_infeasible(const Vec& dys, std::optional<int>& row) const {
  const Vec dy = E_.cwiseProduct(dys) / c_;
  const double ny = inf_norm(dy);
  if (ny <= 1e-12) return false;
  const Vec aty = D_.cwiseInverse().cwiseProduct(prob_.A.transpose() * dy);
  const double eps = set_.eps_infeasible * ny;
  if (inf_norm(aty) > eps) return false;
  double support = prob_.b.dot(dy.head(prob_.n_eq));
  for (int i = 0; i < prob_.n_box; ++i) {
    const double d = dy[prob_.n_eq + i];
    if (d > eps) {
      if (!std::isfinite(prob_.hi[i])) return false;
      support += prob_.hi[i] * d;
    } else if (d < -eps) {
      if (!std::isfinite(prob_.lo[i])) return false;
      support += prob_.lo[i] * d;
    }
  }
  int r = prob_.n_eq + prob_.n_box;
  for (int len : prob_.soc) {
    // dy must lie in the polar cone -K.
    const double t = -dy[r];
    const double nu = dy.segment(r + 1, len - 1).norm();
    if (nu > t + eps) return false;
    r += len;
  }
  if (support >= -eps) return false;
  int best = -1;
  double w = 0.0;
  for (int i = 0; i < prob_.n_eq + prob_.n_box; ++i) {
    if (std::abs(dy[i]) > w) {
      w = std::abs(dy[i]);
      best = i;
    }
  }
  if (best >= 0) row = best;
  return true;
}

Result Solver::solve() {
  if (refactor_) {
    set_rho();
    factor();
  }
  Result res;
  Vec xt, zt, zhat, rhs, y_prev = y_;
  const double alpha = set_.alpha;
  for (int k = 1; k <= set_.max_iter; ++k) {
    rhs = set_.sigma * x_ - qs_ + AsT_ * (rho_.cwiseProduct(z_) - y_);
    xt = ldlt_.solve(rhs);
    zt = As_ * xt;
    x_ = alpha * xt + (1.0 - alpha) * x_;
    zhat = alpha * zt + (1.0 - alpha) * z_;
    Vec znew = zhat + y_.cwiseQuotient(rho_);
    project(znew);
    y_ += rho_.cwiseProduct(zhat - znew);
    z_ = std::move(znew);

    if (k % set_.check_every != 0 && k != set_.max_iter) continue;

    // Unscaled residuals.
    const Vec Ax = As_ * x_;
    const Vec Px = Ps_ * x_;
    const Vec Aty = AsT_ * y_;
    const Vec Einv = E_.cwiseInverse();
    const double rp = inf_norm(Einv.cwiseProduct(Ax - z_));
    const double nAx = inf_norm(Einv.cwiseProduct(Ax));
    const double nz = inf_norm(Einv.cwiseProduct(z_));
    const Vec Dinv = D_.cwiseInverse() / c_;
    const double rd = inf_norm(Dinv.cwiseProduct(Px + qs_ + Aty));
    const double nPx = inf_norm(Dinv.cwiseProduct(Px));
    const double nAty = inf_norm(Dinv.cwiseProduct(Aty));
    const double nq = inf_norm(Dinv.cwiseProduct(qs_));
    res.iterations = k;
    res.prim_res = rp;
    res.dual_res = rd;
    const double ep = set_.eps_abs + set_.eps_rel * std::max(nAx, nz);
    const double ed = set_.eps_abs + set_.eps_rel * std::max({nPx, nAty, nq});
    if (rp <= ep && rd <= ed) {
      res.status = Status::Solved;
      break;
    }
    if (certify_infeasible(y_ - y_prev, res.blocking_row)) {
      res.status = Status::PrimalInfeasible;
      break;
    }
    y_prev = y_;

    if (set_.adaptive_rho) {
      const double sp = inf_norm(Ax - z_) / std::max({inf_norm(Ax), inf_norm(z_), 1e-12});
      const double sd = inf_norm(Px + qs_ + Aty) /
                        std::max({inf_norm(Px), inf_norm(Aty), inf_norm(qs_), 1e-12});
      const double ratio = std::sqrt(sp / std::max(sd, 1e-12));
      const double next = std::clamp(rho_base_ * ratio, kRhoMin, kRhoMax);
      if (next > 5.0 * rho_base_ || next < 0.2 * rho_base_) {
        rho_base_ = next;
        set_rho();
        factor();
      }
    }
  }
  res.x = D_.cwiseProduct(x_);
  res.z = E_.cwiseInverse().cwiseProduct(z_);
  res.y = E_.cwiseProduct(y_) / c_;
  res.objective = 0.5 * res.x.dot(prob_.P * res.x) + prob_.q.dot(res.x);
  return res;
}

}  // namespace v2sim::socp

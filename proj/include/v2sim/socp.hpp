#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace v2sim::socp {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// minimize 1/2 x'Px + q'x subject to z = Ax with
//   rows [0, n_eq):              z = b
//   rows [n_eq, n_eq + n_box):   lo <= z <= hi   (infinite bounds allowed)
//   remaining rows:              consecutive second-order cone blocks; a
//                                block (t, u) requires ||u|| <= t.
struct Problem {
  SpMat P;  // symmetric, full storage
  Vec q;
  SpMat A;
  int n_eq = 0;
  int n_box = 0;
  std::vector<int> soc;
  Vec b, lo, hi;
};

struct Settings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  double eps_infeasible = 1e-7;
  int max_iter = 50000;
  int check_every = 25;
  bool adaptive_rho = true;
  int scaling_iters = 15;
};

enum class Status { Solved, MaxIterations, PrimalInfeasible };

const char* to_string(Status s);

struct Result {
  Status status = Status::MaxIterations;
  Vec x, y, z;
  int iterations = 0;
  double prim_res = 0.0;
  double dual_res = 0.0;
  double objective = 0.0;
  // Row carrying the largest weight of the infeasibility certificate.
  std::optional<int> blocking_row;
};

// Operator-splitting solver. Problem data are equilibrated and the reduced
// KKT matrix factorized once; bounds and the linear cost can be changed
// between solves, which then warm start from the previous iterate.
class Solver {
 public:
  Solver(Problem p, Settings s = {});

  void update_rhs(const Vec& b, const Vec& lo, const Vec& hi);
  void update_q(const Vec& q);
  void reset_iterate();

  Result solve();

  int rows() const { return static_cast<int>(prob_.A.rows()); }
  int cols() const { return static_cast<int>(prob_.A.cols()); }
  int factorizations() const { return factorizations_; }

 private:
  void equilibrate();
  void set_rho();
  void factor();
  void project(Vec& z) const;
  bool certify_infeasible(const Vec& dy, std::optional<int>& row) const;

  Problem prob_;   // original data
  Settings set_;
  // scaled data
  SpMat Ps_, As_, AsT_;
  Vec qs_, bs_, los_, his_;
  Vec D_, E_;
  double c_ = 1.0;
  Vec rho_;
  double rho_base_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  int factorizations_ = 0;
  Vec x_, z_, y_;
  std::vector<char> pinned_;  // box rows with lo == hi
  bool refactor_ = false;
};

}  // namespace v2sim::socp

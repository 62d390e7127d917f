#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace diqkd {

/// Sparse symmetric matrix: entries (i, j, v) with i <= j set both (i,j)
/// and (j,i) to v.
struct SymMat {
  int n = 0;
  std::vector<std::tuple<int, int, double>> entries;

  void add(int i, int j, double v);
  /// Adds coeff so that <M, X> picks up coeff * X_ij (off-diagonal cells
  /// appear twice in the inner product, hence the 1/2).
  void add_cell(int i, int j, double coeff);
  Eigen::MatrixXd dense() const;
  double inner(const Eigen::MatrixXd& x) const;
  double frobenius_norm() const;
  void scale(double s);
};

/// maximize <C, X>  subject to  <A_k, X> = b_k,  X >= 0 (PSD).
struct SDPProblem {
  int matrix_order = 0;
  SymMat objective;
  std::vector<std::pair<SymMat, double>> constraints;
};

enum class SDPStatus { Optimal, Infeasible, MaxIter };

struct SDPSolution {
  double primal_value = 0.0;
  double dual_value = 0.0;
  std::vector<double> dual_values;  // one per original constraint
  double gap = 0.0;                 // relative duality gap
  double primal_residual = 0.0;     // relative feasibility residual
  SDPStatus status = SDPStatus::MaxIter;
  int iterations = 0;
  Eigen::MatrixXd X;
};

struct Preprocessed {
  SDPProblem prob;
  std::vector<int> kept;       // indices into original constraint list
  std::vector<double> scales;  // Frobenius scale applied to each kept row
  bool infeasible = false;     // inconsistent dependent constraints
  int original_count = 0;
};

/// Symmetrizes inputs, drops linearly dependent constraint rows (rank
/// threshold 1e-10; inconsistent duplicates flag infeasibility) and scales
/// rows to unit Frobenius norm. Dual values are mapped back to original
/// units by solve().
Preprocessed preprocess(const SDPProblem& prob);

/// Primal-dual path-following interior point method (Nesterov-Todd scaling,
/// Mehrotra-style predictor-corrector, dense Cholesky on the Schur
/// complement). Deterministic for fixed inputs.
SDPSolution solve(const SDPProblem& prob, double tol = 1e-8, int max_iter = 200);

/// Plain sparse text dump: one line per nonzero "constraint-index row col
/// value" (index 0 is the objective), then "b k value" lines.
void dump_problem(const SDPProblem& prob, std::ostream& os);

}  // namespace diqkd

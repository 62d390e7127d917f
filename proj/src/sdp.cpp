#include "diqkd/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace diqkd {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SymMat::add(int i, int j, double v) {
  if (i > j) std::swap(i, j);
  entries.emplace_back(i, j, v);
}

void SymMat::add_cell(int i, int j, double coeff) {
  if (i > j) std::swap(i, j);
  entries.emplace_back(i, j, i == j ? coeff : coeff / 2.0);
}

MatrixXd SymMat::dense() const {
  MatrixXd m = MatrixXd::Zero(n, n);
  for (const auto& [i, j, v] : entries) {
    m(i, j) += v;
    if (i != j) m(j, i) += v;
  }
  return m;
}

double SymMat::inner(const MatrixXd& x) const {
  double s = 0.0;
  for (const auto& [i, j, v] : entries) s += (i == j) ? v * x(i, i) : 2.0 * v * x(i, j);
  return s;
}

double SymMat::frobenius_norm() const { return dense().norm(); }

void SymMat::scale(double s) {
  for (auto& [i, j, v] : entries) v *= s;
}

namespace {

// svec with sqrt(2) off-diagonal weights, so dot products match <A, B>.
VectorXd svec(const MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  VectorXd v(n * (n + 1) / 2);
  int k = 0;
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    v(k++) = m(i, i);
    for (int j = i + 1; j < n; ++j) v(k++) = r2 * m(i, j);
  }
  return v;
}

SymMat dedupe(const SymMat& a) {
  // merge duplicate coordinate entries for compact inner products
  MatrixXd d = a.dense();
  SymMat out;
  out.n = a.n;
  for (int i = 0; i < a.n; ++i)
    for (int j = i; j < a.n; ++j)
      if (d(i, j) != 0.0) out.entries.emplace_back(i, j, d(i, j));
  return out;
}

// Largest alpha with X + alpha*D PSD, via the min eigenvalue of L^-1 D L^-T.
double max_step(const MatrixXd& x, const MatrixXd& d) {
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd l = llt.matrixL();
  MatrixXd t = l.triangularView<Eigen::Lower>().solve(d);
  t = l.triangularView<Eigen::Lower>().solve(t.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es((t + t.transpose()) / 2.0,
                                             Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

MatrixXd symm_sqrt(const MatrixXd& m, double power) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) d(i) = std::pow(std::max(d(i), 1e-300), power);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Preprocessed preprocess(const SDPProblem& prob) {
  if (prob.matrix_order < 1) {
    throw std::invalid_argument("preprocess: matrix_order must be >= 1");
  }
  Preprocessed out;
  out.original_count = static_cast<int>(prob.constraints.size());
  const int m = out.original_count;
  const int n = prob.matrix_order;
  const int sd = n * (n + 1) / 2;

  MatrixXd rows(sd, m);
  VectorXd b(m);
  std::vector<SymMat> mats(m);
  for (int k = 0; k < m; ++k) {
    mats[k] = dedupe(prob.constraints[k].first);
    mats[k].n = n;
    rows.col(k) = svec(mats[k].dense());
    b(k) = prob.constraints[k].second;
  }

  Eigen::ColPivHouseholderQR<MatrixXd> qr(rows);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  std::vector<int> kept(qr.colsPermutation().indices().data(),
                        qr.colsPermutation().indices().data() + rank);
  std::sort(kept.begin(), kept.end());

  // consistency of dropped rows: b must match the same linear combination
  if (rank < m) {
    MatrixXd basis(sd, rank);
    VectorXd bk(rank);
    for (int i = 0; i < rank; ++i) {
      basis.col(i) = rows.col(kept[i]);
      bk(i) = b(kept[i]);
    }
    Eigen::ColPivHouseholderQR<MatrixXd> bqr(basis);
    std::vector<bool> is_kept(m, false);
    for (int i : kept) is_kept[i] = true;
    for (int k = 0; k < m; ++k) {
      if (is_kept[k]) continue;
      VectorXd coeff = bqr.solve(rows.col(k));
      double norm_row = rows.col(k).norm();
      double implied = coeff.dot(bk);
      if (std::abs(implied - b(k)) > 1e-8 * (1.0 + std::abs(b(k)) + norm_row)) {
        out.infeasible = true;
      }
      // a dependent all-zero row with nonzero b is plainly inconsistent
      if (norm_row < 1e-12 && std::abs(b(k)) > 1e-12) out.infeasible = true;
    }
  }

  out.prob.matrix_order = n;
  out.prob.objective = dedupe(prob.objective);
  out.prob.objective.n = n;
  for (int i : kept) {
    SymMat a = mats[i];
    double fn = a.frobenius_norm();
    double s = (fn > 1e-300) ? 1.0 / fn : 1.0;
    a.scale(s);
    out.prob.constraints.emplace_back(std::move(a), b(i) * s);
    out.kept.push_back(i);
    out.scales.push_back(s);
  }
  return out;
}

SDPSolution solve(const SDPProblem& input, double tol, int max_iter) {
  Preprocessed pp = preprocess(input);
  SDPSolution sol;
  sol.dual_values.assign(pp.original_count, 0.0);
  if (pp.infeasible) {
    sol.status = SDPStatus::Infeasible;
    return sol;
  }
  const SDPProblem& prob = pp.prob;
  const int n = prob.matrix_order;
  const int m = static_cast<int>(prob.constraints.size());
  if (m == 0) {
    throw std::invalid_argument("solve: at least one constraint required");
  }

  MatrixXd c = prob.objective.dense();
  VectorXd b(m);
  for (int k = 0; k < m; ++k) b(k) = prob.constraints[k].second;
  const double bmax = m ? b.cwiseAbs().maxCoeff() : 0.0;
  const double cnorm = c.norm();
  const double bnorm = b.norm();

  double init = 1.0 + bmax;
  MatrixXd x = init * MatrixXd::Identity(n, n);
  MatrixXd s = init * MatrixXd::Identity(n, n);
  VectorXd y = VectorXd::Zero(m);

  auto apply_A = [&](const MatrixXd& mat) {
    VectorXd v(m);
    for (int k = 0; k < m; ++k) v(k) = prob.constraints[k].first.inner(mat);
    return v;
  };
  auto apply_At = [&](const VectorXd& v) {
    MatrixXd mat = MatrixXd::Zero(n, n);
    for (int k = 0; k < m; ++k) {
      for (const auto& [i, j, val] : prob.constraints[k].first.entries) {
        mat(i, j) += v(k) * val;
        if (i != j) mat(j, i) += v(k) * val;
      }
    }
    return mat;
  };

  std::vector<MatrixXd> wAw(m, MatrixXd(n, n));
  MatrixXd schur(m, m);

  double best_gap = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    double pobj = prob.objective.inner(x);
    double dobj = b.dot(y);
    VectorXd rp = b - apply_A(x);
    MatrixXd rd = c + s - apply_At(y);
    double mu = (x.cwiseProduct(s)).sum() / n;

    double rp_rel = rp.norm() / (1.0 + bnorm);
    double rd_rel = rd.norm() / (1.0 + cnorm);
    double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

#ifndef NDEBUG
    // weak duality at (nearly) feasible iterates
    if (rp_rel < 1e-9 && rd_rel < 1e-9 && dobj < pobj - 1e-9 * (1.0 + std::abs(pobj))) {
      throw std::logic_error("sdp: weak duality violated at feasible iterate");
    }
#endif

    sol.primal_value = pobj;
    sol.dual_value = dobj;
    sol.gap = relgap;
    sol.primal_residual = rp_rel;
    sol.iterations = iter;
    sol.X = x;

    if (rp_rel <= tol && rd_rel <= tol && relgap <= tol) {
      sol.status = SDPStatus::Optimal;
      for (int k = 0; k < m; ++k) sol.dual_values[pp.kept[k]] = y(k) * pp.scales[k];
      return sol;
    }

    // heuristic infeasibility: dual objective diverging along an improving ray
    if (dobj < -1e9 * (1.0 + bnorm) && rd_rel < 1e-5) {
      sol.status = SDPStatus::Infeasible;
      return sol;
    }
    if (mu < 1e-13 && rp_rel > 1e-5) {
      sol.status = SDPStatus::Infeasible;
      return sol;
    }
    double merit = std::max({rp_rel, rd_rel, relgap});
    if (merit < best_gap * 0.999) {
      best_gap = merit;
      stalled = 0;
    } else if (++stalled > 30) {
      break;
    }

    // Nesterov-Todd scaling point: W S W = X
    MatrixXd xs = symm_sqrt((x + x.transpose()) / 2.0, 0.5);
    MatrixXd m2 = xs * s * xs;
    MatrixXd w = xs * symm_sqrt((m2 + m2.transpose()) / 2.0, -0.5) * xs;
    w = (w + w.transpose()) / 2.0;

    Eigen::LLT<MatrixXd> slt(s);
    if (slt.info() != Eigen::Success) break;
    MatrixXd sinv = slt.solve(MatrixXd::Identity(n, n));

    for (int k = 0; k < m; ++k) {
      MatrixXd& out = wAw[k];
      out.setZero();
      for (const auto& [i, j, v] : prob.constraints[k].first.entries) {
        if (i == j) {
          out.noalias() += v * (w.col(i) * w.col(i).transpose());
        } else {
          out.noalias() += v * (w.col(i) * w.col(j).transpose());
          out.noalias() += v * (w.col(j) * w.col(i).transpose());
        }
      }
    }
    for (int k = 0; k < m; ++k)
      for (int l = 0; l <= k; ++l) {
        double v = prob.constraints[k].first.inner(wAw[l]);
        schur(k, l) = v;
        schur(l, k) = v;
      }
    Eigen::LLT<MatrixXd> slv(schur);
    if (slv.info() != Eigen::Success) {
      schur.diagonal().array() += 1e-12 * (1.0 + schur.trace() / m);
      slv.compute(schur);
      if (slv.info() != Eigen::Success) break;
    }

    MatrixXd w_rd_w = w * rd * w;
    VectorXd a_wrdw = apply_A(w_rd_w);

    auto direction = [&](const MatrixXd& rc, VectorXd& dy, MatrixXd& dx,
                         MatrixXd& ds) {
      VectorXd q = a_wrdw + apply_A(rc) - rp;
      dy = slv.solve(q);
      // two rounds of iterative refinement: the Schur system turns very
      // ill-conditioned as mu -> 0 and the raw solve loses digits
      for (int r = 0; r < 2; ++r) {
        VectorXd resid = q - schur.selfadjointView<Eigen::Lower>() * dy;
        dy += slv.solve(resid);
      }
      ds = apply_At(dy) - rd;
      dx = rc - w * ds * w;
      dx = ((dx + dx.transpose()) / 2.0).eval();
    };

    // predictor (affine scaling)
    VectorXd dy_a;
    MatrixXd dx_a, ds_a;
    direction(-x, dy_a, dx_a, ds_a);
    const double tau = 0.98;
    double ap_a = std::min(1.0, tau * max_step(x, dx_a));
    double ad_a = std::min(1.0, tau * max_step(s, ds_a));
    double mu_aff =
        ((x + ap_a * dx_a).cwiseProduct(s + ad_a * ds_a)).sum() / n;
    double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 1e-8, 1.0);

    // corrector with second-order term
    MatrixXd corr = 0.5 * (dx_a * ds_a * sinv + sinv * ds_a * dx_a);
    MatrixXd rc = sigma * mu * sinv - x - corr;
    rc = ((rc + rc.transpose()) / 2.0).eval();
    VectorXd dy;
    MatrixXd dx, ds;
    direction(rc, dy, dx, ds);
    double ap = std::min(1.0, tau * max_step(x, dx));
    double ad = std::min(1.0, tau * max_step(s, ds));
    if (ap + ad < 0.8 * (ap_a + ad_a)) {
      // corrector hurt the step; retry without the second-order term
      MatrixXd rc2 = sigma * mu * sinv - x;
      direction(rc2, dy, dx, ds);
      ap = std::min(1.0, tau * max_step(x, dx));
      ad = std::min(1.0, tau * max_step(s, ds));
    }
    if (ap <= 1e-14 && ad <= 1e-14) break;

#ifdef DIQKD_SDP_TRACE
    std::fprintf(stderr,
                 "it=%3d mu=%9.2e gap=%9.2e rp=%9.2e rd=%9.2e sigma=%7.1e "
                 "ap=%6.3f ad=%6.3f\n",
                 iter, mu, relgap, rp_rel, rd_rel, sigma, ap, ad);
#endif
    x += ap * dx;
    y += ad * dy;
    s += ad * ds;
    x = ((x + x.transpose()) / 2.0).eval();
    s = ((s + s.transpose()) / 2.0).eval();
  }

  for (int k = 0; k < m; ++k) sol.dual_values[pp.kept[k]] = y(k) * pp.scales[k];
  sol.status = (sol.dual_value < -1e9 * (1.0 + bnorm)) ? SDPStatus::Infeasible
                                                       : SDPStatus::MaxIter;
  return sol;
}

void dump_problem(const SDPProblem& prob, std::ostream& os) {
  auto emit = [&](int idx, const SymMat& mat) {
    for (const auto& [i, j, v] : mat.entries) {
      if (v != 0.0) os << idx << " " << i << " " << j << " " << v << "\n";
    }
  };
  emit(0, prob.objective);
  for (size_t k = 0; k < prob.constraints.size(); ++k) {
    emit(static_cast<int>(k) + 1, prob.constraints[k].first);
  }
  for (size_t k = 0; k < prob.constraints.size(); ++k) {
    os << "b " << k + 1 << " " << prob.constraints[k].second << "\n";
  }
}

}  // namespace diqkd

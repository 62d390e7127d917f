#include "diqkd/npa.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace diqkd {

NpaLevel parse_level(const std::string& s) {
  if (s == "1") return NpaLevel::One;
  if (s == "1ab" || s == "1+ab" || s == "1+AB" || s == "1AB")
    return NpaLevel::OnePlusAB;
  if (s == "2") return NpaLevel::Two;
  throw std::invalid_argument("unsupported relaxation level '" + s + "'");
}

std::string level_name(NpaLevel level) {
  switch (level) {
    case NpaLevel::One: return "1";
    case NpaLevel::OnePlusAB: return "1+AB";
    case NpaLevel::Two: return "2";
  }
  return "?";
}

MomentBasis build_basis(const Scenario& s, NpaLevel level) {
  if (s.inputs_a < 2 || s.inputs_b < 2) {
    throw std::invalid_argument("build_basis: need >= 2 inputs per side");
  }
  std::vector<Generator> agens, bgens;
  for (int x = 0; x < s.inputs_a; ++x)
    for (int a = 0; a < s.outputs_a - 1; ++a)
      agens.push_back(Generator::proj(Party::Alice, x, a));
  for (int y = 0; y < s.inputs_b; ++y)
    for (int b = 0; b < s.outputs_b - 1; ++b)
      bgens.push_back(Generator::proj(Party::Bob, y, b));

  MomentBasis basis;
  basis.level = level;
  basis.words.push_back({});  // identity
  for (const Generator& g : agens) basis.words.push_back({g});
  for (const Generator& g : bgens) basis.words.push_back({g});

  auto add_products = [&](const std::vector<Generator>& lhs,
                          const std::vector<Generator>& rhs) {
    std::set<Word> seen(basis.words.begin(), basis.words.end());
    for (const Generator& g1 : lhs)
      for (const Generator& g2 : rhs) {
        Word nf;
        double sign;
        if (!normalize_word({g1, g2}, nf, sign)) continue;
        if (nf.size() != 2) continue;  // reduced to shorter word: already present
        if (seen.insert(nf).second) basis.words.push_back(nf);
      }
  };
  if (level == NpaLevel::OnePlusAB) {
    add_products(agens, bgens);
  } else if (level == NpaLevel::Two) {
    add_products(agens, agens);
    add_products(bgens, bgens);
    add_products(agens, bgens);
  }
  return basis;
}

namespace {

Word word_adjoint(const Word& w) {
  std::vector<Generator> a, b;
  for (const Generator& g : w) (g.party == Party::Alice ? a : b).push_back(g);
  Word out;
  out.insert(out.end(), a.rbegin(), a.rend());
  out.insert(out.end(), b.rbegin(), b.rend());
  return out;
}

// Moments are real, so <w> = <w^dag>; key every group by the lexicographic
// minimum of the reduced word and its reduced adjoint.
Word canonical_word(const Word& nf) {
  Word adj_nf;
  double sign;
  if (!normalize_word(word_adjoint(nf), adj_nf, sign)) return nf;
  return std::min(nf, adj_nf);
}

// Expand a projector with the last outcome eliminated: either the kept
// generator itself, or 1 - sum of kept ones.
std::vector<std::pair<double, Word>> expand_projector(Party p, int input,
                                                      int outcome,
                                                      int outputs) {
  if (outcome < outputs - 1) {
    return {{1.0, {Generator::proj(p, input, outcome)}}};
  }
  std::vector<std::pair<double, Word>> out = {{1.0, {}}};
  for (int o = 0; o < outputs - 1; ++o)
    out.push_back({-1.0, {Generator::proj(p, input, o)}});
  return out;
}

}  // namespace

RelaxationProblem build(const BellInequality& ineq, int a_target, int x_raw,
                        NpaLevel level) {
  const Scenario& s = ineq.scenario;
  if (x_raw < 0 || x_raw >= s.inputs_a) {
    throw std::invalid_argument("build: x_raw out of range");
  }
  if (a_target < 0 || a_target >= s.outputs_a) {
    throw std::invalid_argument("build: a_target out of range");
  }
  RelaxationProblem prob;
  prob.scenario = s;
  prob.basis = build_basis(s, level);
  prob.a_target = a_target;
  prob.x_raw = x_raw;
  const int n = static_cast<int>(prob.basis.words.size());

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Word concat = word_adjoint(prob.basis.words[i]);
      const Word& right = prob.basis.words[j];
      concat.insert(concat.end(), right.begin(), right.end());
      Word nf;
      double sign;
      if (!normalize_word(concat, nf, sign)) {
        prob.zero_cells.emplace_back(i, j);
      } else {
        prob.equality_groups[canonical_word(nf)].emplace_back(i, j);
      }
    }
  }

  // objective P(a_target | x_raw)
  for (auto& [c, w] :
       expand_projector(Party::Alice, x_raw, a_target, s.outputs_a)) {
    if (w.empty()) {
      prob.objective_constant += c;
    } else {
      prob.objective_terms[w] += c;
    }
  }
  if (a_target < s.outputs_a - 1) {
    Word w = {Generator::proj(Party::Alice, x_raw, a_target)};
    auto it = prob.equality_groups.find(w);
    if (it != prob.equality_groups.end()) prob.objective_cell = it->second.front();
  }

  // Bell expectation over the moment words, eliminated outcomes re-expanded
  for (int a = 0; a < s.outputs_a; ++a)
    for (int b = 0; b < s.outputs_b; ++b)
      for (int x = 0; x < s.inputs_a; ++x)
        for (int y = 0; y < s.inputs_b; ++y) {
          double coeff = ineq.coeff(a, b, x, y);
          if (coeff == 0.0) continue;
          for (auto& [ca, wa] : expand_projector(Party::Alice, x, a, s.outputs_a))
            for (auto& [cb, wb] : expand_projector(Party::Bob, y, b, s.outputs_b)) {
              Word concat = wa;
              concat.insert(concat.end(), wb.begin(), wb.end());
              Word nf;
              double sign;
              if (!normalize_word(concat, nf, sign)) continue;
              double v = coeff * ca * cb * sign;
              if (nf.empty()) {
                prob.bell_constant += v;
              } else {
                prob.bell_terms[canonical_word(nf)] += v;
              }
            }
        }
  return prob;
}

namespace {

std::pair<int, int> representative_cell(const RelaxationProblem& prob,
                                        const Word& w) {
  auto it = prob.equality_groups.find(w);
  if (it == prob.equality_groups.end()) {
    throw std::logic_error("moment word missing from matrix: basis too small");
  }
  return it->second.front();
}

SDPProblem structure_sdp(const RelaxationProblem& prob) {
  SDPProblem sdp;
  const int n = static_cast<int>(prob.basis.words.size());
  sdp.matrix_order = n;
  sdp.objective.n = n;

  SymMat norm;
  norm.n = n;
  norm.add_cell(0, 0, 1.0);
  sdp.constraints.emplace_back(norm, 1.0);

  for (const auto& [w, cells] : prob.equality_groups) {
    for (size_t i = 1; i < cells.size(); ++i) {
      SymMat eq;
      eq.n = n;
      eq.add_cell(cells[i].first, cells[i].second, 1.0);
      eq.add_cell(cells[0].first, cells[0].second, -1.0);
      sdp.constraints.emplace_back(std::move(eq), 0.0);
    }
  }
  for (const auto& [i, j] : prob.zero_cells) {
    SymMat z;
    z.n = n;
    z.add_cell(i, j, 1.0);
    sdp.constraints.emplace_back(std::move(z), 0.0);
  }
  return sdp;
}

SymMat functional_matrix(const RelaxationProblem& prob,
                         const std::map<Word, double>& terms, double constant) {
  SymMat c;
  c.n = static_cast<int>(prob.basis.words.size());
  if (constant != 0.0) c.add_cell(0, 0, constant);  // X00 = 1
  for (const auto& [w, v] : terms) {
    auto [i, j] = representative_cell(prob, w);
    c.add_cell(i, j, v);
  }
  return c;
}

}  // namespace

namespace {

/// Repair numerical dual infeasibility: y certifies <C,X> <= y.b only when
/// Z = sum_k y_k A_k - C is PSD. When the solver leaves Z with a slightly
/// negative eigenvalue, <C,X> <= y.b + |lambda_min| tr(X), and every diagonal
/// moment is a projector expectation in [0,1], so tr(X) <= n. Returns the
/// (non-negative) lift making the dual objective a rigorous upper bound.
double dual_feasibility_lift(const SDPProblem& sdp, const SDPSolution& sol) {
  const int n = sdp.matrix_order;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < sdp.constraints.size(); ++k) {
    z += sol.dual_values[k] * sdp.constraints[k].first.dense();
  }
  z -= sdp.objective.dense();
  double lambda_min =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(z, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  return std::max(0.0, -lambda_min) * n;
}

}  // namespace

SDPProblem to_sdp(const RelaxationProblem& prob, double g_exp) {
  SDPProblem sdp = structure_sdp(prob);
  sdp.objective =
      functional_matrix(prob, prob.objective_terms, prob.objective_constant);
  SymMat bell = functional_matrix(prob, prob.bell_terms, prob.bell_constant);
  sdp.constraints.emplace_back(std::move(bell), g_exp);
  return sdp;
}

PointResult solve_point(const RelaxationProblem& prob, double g_exp,
                        double tol) {
  SDPProblem sdp = to_sdp(prob, g_exp);
  const int bell_index = static_cast<int>(sdp.constraints.size()) - 1;
  SDPSolution sol = solve(sdp, tol);
  if (sol.status == SDPStatus::Infeasible || sol.primal_residual > 1e-5) {
    // primal residual stuck far from zero: no moment matrix matches g_exp
    throw InfeasiblePoint("relaxation infeasible at g_exp = " +
                          std::to_string(g_exp) +
                          " (above the certified quantum maximum)");
  }
  // near the boundary of the quantum set strict complementarity fails and
  // the gap plateaus; the dual value stays a valid upper bound, so accept a
  // loose gap as long as feasibility is solid
  if (sol.status == SDPStatus::MaxIter &&
      (sol.gap > 1e-3 || sol.primal_residual > 1e-6)) {
    std::ostringstream os;
    os << "sdp did not converge at g_exp = " << g_exp
       << " (gap " << sol.gap << ", feas " << sol.primal_residual << ")";
    throw std::runtime_error(os.str());
  }
  PointResult res;
  // report the dual objective: by weak duality it upper-bounds the
  // relaxation optimum, which is the safe direction for a security bound
  res.value = sol.dual_value + dual_feasibility_lift(sdp, sol);
  double nu = sol.dual_values[bell_index];
  if (nu > 0.0 && nu < 1e-7) nu = 0.0;  // solver noise at flat regions
  res.certificate.g0 = g_exp;
  res.certificate.nu = nu;
  // the lifted intercept keeps mu + nu*g valid for every quantum point
  res.certificate.mu = res.value - nu * g_exp;
  return res;
}

double quantum_max(const BellInequality& ineq, NpaLevel level) {
  RelaxationProblem prob = build(ineq, 0, 0, level);
  SDPProblem sdp = structure_sdp(prob);
  sdp.objective = functional_matrix(prob, prob.bell_terms, prob.bell_constant);
  SDPSolution sol = solve(sdp);
  if (sol.status == SDPStatus::Infeasible) {
    throw std::runtime_error("quantum_max: unexpectedly infeasible");
  }
  if (sol.status == SDPStatus::MaxIter && sol.gap > 1e-6) {
    throw std::runtime_error("quantum_max: solver did not converge");
  }
  // upper bound by weak duality, lifted to cover residual dual infeasibility
  return sol.dual_value + dual_feasibility_lift(sdp, sol);
}

}  // namespace diqkd

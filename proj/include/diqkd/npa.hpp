#pragma once

#include <map>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"
#include "diqkd/linear_bound.hpp"
#include "diqkd/ncpoly.hpp"
#include "diqkd/sdp.hpp"

namespace diqkd {

enum class NpaLevel { One, OnePlusAB, Two };

NpaLevel parse_level(const std::string& s);  // "1", "1ab"/"1+ab", "2"
std::string level_name(NpaLevel level);

/// Ordered monomial basis of the moment matrix; identity first. The last
/// outcome of every input is eliminated via completeness.
struct MomentBasis {
  NpaLevel level = NpaLevel::Two;
  std::vector<Word> words;
};

MomentBasis build_basis(const Scenario& s, NpaLevel level);

/// Structure of the moment-matrix SDP for max P(a_target | x_raw) subject to
/// a fixed Bell expectation.
struct RelaxationProblem {
  MomentBasis basis;
  Scenario scenario;
  /// cells grouped by the reduced word u^dag v; each group's cells carry
  /// equal moments
  std::map<Word, std::vector<std::pair<int, int>>> equality_groups;
  std::vector<std::pair<int, int>> zero_cells;
  std::pair<int, int> objective_cell{0, 0};
  /// P(a_target|x_raw) as constant + coefficients over moment words (the
  /// constant appears when a_target is the eliminated outcome)
  double objective_constant = 0.0;
  std::map<Word, double> objective_terms;
  /// Bell expectation as constant + sum of coefficients over moment words
  double bell_constant = 0.0;
  std::map<Word, double> bell_terms;
  int a_target = 0;
  int x_raw = 0;
};

/// Builds the relaxation structure for the inequality's scenario.
RelaxationProblem build(const BellInequality& ineq, int a_target, int x_raw,
                        NpaLevel level);

struct PointResult {
  double value = 0.0;        // relaxation optimum (upper bound on P_guess)
  LinearBound certificate;   // mu + nu*g dominating the curve globally
};

/// Thrown when g_exp lies outside the feasible (quantum) range.
struct InfeasiblePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

PointResult solve_point(const RelaxationProblem& prob, double g_exp,
                        double tol = 1e-8);

/// SDP upper bound on the Bell value over the moment cone.
double quantum_max(const BellInequality& ineq, NpaLevel level);

/// Standard-form SDP for the relaxation at a given Bell expectation; exposed
/// for problem dumps and direct solver-level tests.
SDPProblem to_sdp(const RelaxationProblem& prob, double g_exp);

}  // namespace diqkd

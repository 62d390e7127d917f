#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"
#include "diqkd/linear_bound.hpp"
#include "diqkd/quantum.hpp"

namespace diqkd {

enum class Party : std::uint8_t { Alice = 0, Bob = 1 };

/// One measurement letter: dichotomic A_x / B_y or projector A(a|x) / B(b|y).
struct Generator {
  Party party = Party::Alice;
  std::uint8_t input = 0;
  bool projector = false;
  std::uint8_t outcome = 0;  // only meaningful for projector flavor

  auto operator<=>(const Generator&) const = default;

  static Generator dichotomic(Party p, int input);
  static Generator proj(Party p, int input, int outcome);
};

/// A word is a product of generators. The canonical (normal) form keeps all
/// Alice letters before Bob letters and is fully reduced.
using Word = std::vector<Generator>;

constexpr int kMaxWordDegree = 6;

/// Real-coefficient noncommutative polynomial, stored in normal form.
class NCPolynomial {
 public:
  NCPolynomial() = default;
  static NCPolynomial constant(double c);
  static NCPolynomial monomial(Word w, double c = 1.0);

  const std::map<Word, double>& terms() const { return terms_; }

  NCPolynomial& operator+=(const NCPolynomial& other);
  NCPolynomial& operator-=(const NCPolynomial& other);
  NCPolynomial operator+(const NCPolynomial& o) const;
  NCPolynomial operator-(const NCPolynomial& o) const;
  NCPolynomial operator*(const NCPolynomial& o) const;
  NCPolynomial operator*(double c) const;

  double max_abs_coeff() const;
  std::string str() const;

  /// Raw term insertion (word normalized internally).
  void add_term(const Word& w, double c);

 private:
  std::map<Word, double> terms_;
};

/// Reduce a word: commute Bob letters right of Alice letters (preserving
/// order within each party), then apply A_x^2 = 1, idempotence and
/// orthogonality of projectors to fixpoint. Returns false when the word
/// vanishes (orthogonal projectors met).
bool normalize_word(const Word& in, Word& out, double& sign);

NCPolynomial normal_form(const NCPolynomial& p);

/// Reverse every word within each party block; generators are self-adjoint
/// and coefficients real.
NCPolynomial adjoint(const NCPolynomial& p);

/// Replace each dichotomic letter by 2*A(0|x) - 1 (binary outcomes).
NCPolynomial to_projector_form(const NCPolynomial& p);

/// Concrete matrix of a polynomial under given measurement sets, with Alice
/// operators acting on the first factor and Bob on the second. Dichotomic
/// letters map to A(0|x) - A(1|x) (requires 2 outcomes).
Eigen::MatrixXcd evaluate(const NCPolynomial& p, const MeasurementSet& alice,
                          const MeasurementSet& bob);

/// Bell operator G = sum g_abxy A(a|x) B(b|y) in projector letters.
NCPolynomial bell_operator(const BellInequality& ineq);

/// Appendix certificate data at linearization point g0.
struct SOSCertificate {
  double g0 = 0.0;
  double alpha = 0.0;
  double gamma[5] = {0, 0, 0, 0, 0};
  std::vector<NCPolynomial> sos_terms;  // O_1..O_4
  NCPolynomial target;                  // rhs - lhs of the operator inequality
};

SOSCertificate make_chsh_sos(double g0);

/// Residual of sum O_i^dag O_i minus the identity's right-hand side at g0;
/// success means every coefficient magnitude < 1e-12.
NCPolynomial verify_chsh_sos(double g0);

/// Max absolute residual over an even grid of k points in [2, 2*sqrt(2)-1e-3].
/// Parallel over grid points; per-point residuals returned in order.
std::vector<double> verify_chsh_sos_grid(int k);

/// Scalarized check of the operator inequality A(a|x_raw) <= mu + nu G on
/// correlation tables: max_a P(a|x_raw) <= mu + nu*g + 1e-9.
struct OperatorInequalityReport {
  bool pass = true;
  double max_violation = 0.0;  // positive means falsified
  std::vector<int> failing_tables;
};

OperatorInequalityReport check_operator_inequality(
    const LinearBound& bound, const BellInequality& ineq, int x_raw,
    const std::vector<CorrelationTable>& trial_tables);

}  // namespace diqkd

#include "diqkd/ncpoly.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace diqkd {

Generator Generator::dichotomic(Party p, int input) {
  return Generator{p, static_cast<std::uint8_t>(input), false, 0};
}

Generator Generator::proj(Party p, int input, int outcome) {
  return Generator{p, static_cast<std::uint8_t>(input), true,
                   static_cast<std::uint8_t>(outcome)};
}

namespace {

// Reduce one party block in place. Returns false when the block vanishes.
bool reduce_block(std::vector<Generator>& block) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < block.size(); ++i) {
      const Generator& g1 = block[i];
      const Generator& g2 = block[i + 1];
      if (g1.projector != g2.projector || g1.input != g2.input) continue;
      if (!g1.projector) {  // A_x A_x = 1
        block.erase(block.begin() + i, block.begin() + i + 2);
        changed = true;
        break;
      }
      if (g1.outcome == g2.outcome) {  // idempotence
        block.erase(block.begin() + i);
        changed = true;
        break;
      }
      return false;  // orthogonality: zero
    }
  }
  return true;
}

}  // namespace

bool normalize_word(const Word& in, Word& out, double& sign) {
  sign = 1.0;
  std::vector<Generator> a, b;
  for (const Generator& g : in) {
    (g.party == Party::Alice ? a : b).push_back(g);
  }
  if (!reduce_block(a) || !reduce_block(b)) return false;
  if (a.size() + b.size() > kMaxWordDegree) {
    throw std::runtime_error("NCPolynomial: word degree exceeds cap " +
                             std::to_string(kMaxWordDegree));
  }
  out.clear();
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return true;
}

NCPolynomial NCPolynomial::constant(double c) {
  NCPolynomial p;
  p.add_term({}, c);
  return p;
}

NCPolynomial NCPolynomial::monomial(Word w, double c) {
  NCPolynomial p;
  p.add_term(w, c);
  return p;
}

void NCPolynomial::add_term(const Word& w, double c) {
  if (c == 0.0) return;
  Word nf;
  double sign;
  if (!normalize_word(w, nf, sign)) return;
  double& slot = terms_[nf];
  slot += sign * c;
  if (slot == 0.0) terms_.erase(nf);
}

NCPolynomial& NCPolynomial::operator+=(const NCPolynomial& other) {
  for (const auto& [w, c] : other.terms_) add_term(w, c);
  return *this;
}

NCPolynomial& NCPolynomial::operator-=(const NCPolynomial& other) {
  for (const auto& [w, c] : other.terms_) add_term(w, -c);
  return *this;
}

NCPolynomial NCPolynomial::operator+(const NCPolynomial& o) const {
  NCPolynomial r = *this;
  r += o;
  return r;
}

NCPolynomial NCPolynomial::operator-(const NCPolynomial& o) const {
  NCPolynomial r = *this;
  r -= o;
  return r;
}

NCPolynomial NCPolynomial::operator*(const NCPolynomial& o) const {
  NCPolynomial r;
  for (const auto& [w1, c1] : terms_) {
    for (const auto& [w2, c2] : o.terms_) {
      Word concat = w1;
      concat.insert(concat.end(), w2.begin(), w2.end());
      r.add_term(concat, c1 * c2);
    }
  }
  return r;
}

NCPolynomial NCPolynomial::operator*(double c) const {
  NCPolynomial r;
  for (const auto& [w, v] : terms_) r.add_term(w, v * c);
  return r;
}

double NCPolynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [w, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

std::string NCPolynomial::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [w, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (const Generator& g : w) {
      os << (g.party == Party::Alice ? " A" : " B");
      if (g.projector) {
        os << "(" << int(g.outcome) << "|" << int(g.input) << ")";
      } else {
        os << int(g.input);
      }
    }
  }
  if (first) os << "0";
  return os.str();
}

NCPolynomial normal_form(const NCPolynomial& p) {
  NCPolynomial r;
  for (const auto& [w, c] : p.terms()) r.add_term(w, c);
  return r;
}

NCPolynomial adjoint(const NCPolynomial& p) {
  NCPolynomial r;
  for (const auto& [w, c] : p.terms()) {
    std::vector<Generator> a, b;
    for (const Generator& g : w) (g.party == Party::Alice ? a : b).push_back(g);
    Word rev;
    rev.insert(rev.end(), a.rbegin(), a.rend());
    rev.insert(rev.end(), b.rbegin(), b.rend());
    r.add_term(rev, c);
  }
  return r;
}

NCPolynomial to_projector_form(const NCPolynomial& p) {
  NCPolynomial r;
  for (const auto& [w, c] : p.terms()) {
    // expand each dichotomic letter as 2*P(0) - 1
    std::vector<std::pair<Word, double>> partial = {{Word{}, c}};
    for (const Generator& g : w) {
      std::vector<std::pair<Word, double>> next;
      if (g.projector) {
        for (auto& [pw, pc] : partial) {
          Word nw = pw;
          nw.push_back(g);
          next.emplace_back(std::move(nw), pc);
        }
      } else {
        for (auto& [pw, pc] : partial) {
          Word nw = pw;
          nw.push_back(Generator::proj(g.party, g.input, 0));
          next.emplace_back(std::move(nw), 2.0 * pc);
          next.emplace_back(pw, -pc);
        }
      }
      partial = std::move(next);
    }
    for (auto& [pw, pc] : partial) r.add_term(pw, pc);
  }
  return r;
}

Eigen::MatrixXcd evaluate(const NCPolynomial& p, const MeasurementSet& alice,
                          const MeasurementSet& bob) {
  using Eigen::MatrixXcd;
  const int dim = alice.dim * bob.dim;
  auto letter_matrix = [&](const Generator& g) -> MatrixXcd {
    const MeasurementSet& ms = (g.party == Party::Alice) ? alice : bob;
    MatrixXcd local;
    if (g.projector) {
      local = ms.op(g.outcome, g.input);
    } else {
      if (ms.outputs() != 2) {
        throw std::invalid_argument("evaluate: dichotomic letter needs 2 outcomes");
      }
      local = ms.op(0, g.input) - ms.op(1, g.input);
    }
    MatrixXcd full = MatrixXcd::Zero(dim, dim);
    if (g.party == Party::Alice) {
      for (int i = 0; i < alice.dim; ++i)
        for (int j = 0; j < alice.dim; ++j)
          full.block(i * bob.dim, j * bob.dim, bob.dim, bob.dim) =
              local(i, j) * MatrixXcd::Identity(bob.dim, bob.dim);
    } else {
      for (int i = 0; i < alice.dim; ++i)
        full.block(i * bob.dim, i * bob.dim, bob.dim, bob.dim) = local;
    }
    return full;
  };
  MatrixXcd acc = MatrixXcd::Zero(dim, dim);
  for (const auto& [w, c] : p.terms()) {
    MatrixXcd m = MatrixXcd::Identity(dim, dim);
    for (const Generator& g : w) m = m * letter_matrix(g);
    acc += c * m;
  }
  return acc;
}

NCPolynomial bell_operator(const BellInequality& ineq) {
  const Scenario& s = ineq.scenario;
  NCPolynomial g;
  for (int a = 0; a < s.outputs_a; ++a)
    for (int b = 0; b < s.outputs_b; ++b)
      for (int x = 0; x < s.inputs_a; ++x)
        for (int y = 0; y < s.inputs_b; ++y) {
          double c = ineq.coeff(a, b, x, y);
          if (c == 0.0) continue;
          g.add_term({Generator::proj(Party::Alice, x, a),
                      Generator::proj(Party::Bob, y, b)},
                     c);
        }
  return g;
}

SOSCertificate make_chsh_sos(double g0) {
  const double gmax = 2.0 * std::numbers::sqrt2;
  if (!(g0 >= 2.0 && g0 < gmax)) {
    throw std::invalid_argument(
        "make_chsh_sos: g0 must lie in [2, 2*sqrt(2)) (alpha singular at the top)");
  }
  SOSCertificate cert;
  cert.g0 = g0;
  const double alpha = 1.0 / std::sqrt(8.0 - g0 * g0);
  const double sa = std::sqrt(alpha);
  cert.alpha = alpha;
  const double c1 = sa / 4.0;                       // gamma_1
  const double c2 = -g0 * sa / 8.0;                 // gamma_2
  const double c3 = g0 / (16.0 * sa);               // gamma_3
  const double c4 = 1.0 / (8.0 * sa);               // gamma_4
  const double c5 = (1.0 - g0 * g0 / 4.0) * sa / 4.0;  // gamma_5
  cert.gamma[0] = c1;
  cert.gamma[1] = c2;
  cert.gamma[2] = c3;
  cert.gamma[3] = c4;
  cert.gamma[4] = c5;

  // dichotomic letters; the appendix's A_1,A_2,B_1,B_2 map to A0,A1,B0,B1
  auto A = [](int x) {
    return NCPolynomial::monomial({Generator::dichotomic(Party::Alice, x)});
  };
  auto B = [](int y) {
    return NCPolynomial::monomial({Generator::dichotomic(Party::Bob, y)});
  };
  auto AB = [](int x, int y) {
    return NCPolynomial::monomial({Generator::dichotomic(Party::Alice, x),
                                   Generator::dichotomic(Party::Bob, y)});
  };
  NCPolynomial one = NCPolynomial::constant(1.0);

  NCPolynomial o1 = A(1) * (-2.0 * c1) + (B(0) - B(1)) * (-c2) +
                    (AB(1, 0) + AB(1, 1)) * c3;
  NCPolynomial o2 = one * (-2.0 * c2) + A(0) * (-2.0 * c3) +
                    (B(0) + B(1)) * c4 + (AB(0, 0) + AB(0, 1)) * (-c1) +
                    (AB(1, 0) - AB(1, 1)) * c5;
  NCPolynomial o3 = (B(0) - B(1)) * (-c4) + (AB(0, 0) - AB(0, 1)) * c1 +
                    (AB(1, 0) + AB(1, 1)) * (-c5);
  NCPolynomial o4 = one * (2.0 * c4) + A(0) * (-2.0 * c5) +
                    (B(0) + B(1)) * c2 + (AB(1, 0) - AB(1, 1)) * (-c3);
  cert.sos_terms = {o1, o2, o3, o4};

  NCPolynomial g = AB(0, 0) + AB(0, 1) + AB(1, 0) - AB(1, 1);
  const double root = std::sqrt(2.0 - g0 * g0 / 4.0);
  cert.target = one * (1.0 / root) - A(0) * 0.5 - g * (g0 / (8.0 * root));
  return cert;
}

NCPolynomial verify_chsh_sos(double g0) {
  SOSCertificate cert = make_chsh_sos(g0);
  NCPolynomial sum;
  for (const NCPolynomial& o : cert.sos_terms) sum += adjoint(o) * o;
  return sum - cert.target;
}

std::vector<double> verify_chsh_sos_grid(int k) {
  if (k < 1) throw std::invalid_argument("verify_chsh_sos_grid: k >= 1");
  const double lo = 2.0;
  const double hi = 2.0 * std::numbers::sqrt2 - 1e-3;
  std::vector<double> residuals(k, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < k; ++i) {
    double g0 = (k == 1) ? lo : lo + (hi - lo) * i / (k - 1);
    residuals[i] = verify_chsh_sos(g0).max_abs_coeff();
  }
  return residuals;
}

OperatorInequalityReport check_operator_inequality(
    const LinearBound& bound, const BellInequality& ineq, int x_raw,
    const std::vector<CorrelationTable>& trial_tables) {
  OperatorInequalityReport rep;
  for (size_t t = 0; t < trial_tables.size(); ++t) {
    const CorrelationTable& table = trial_tables[t];
    double g = bell_value(ineq, table);
    const Scenario& s = table.scenario();
    double max_p = 0.0;
    for (int a = 0; a < s.outputs_a; ++a) {
      double p = 0.0;
      for (int b = 0; b < s.outputs_b; ++b) p += table.value(a, b, x_raw, 0);
      max_p = std::max(max_p, p);
    }
    double violation = max_p - (bound.eval(g) + 1e-9);
    if (violation > 0.0) {
      rep.pass = false;
      rep.failing_tables.push_back(static_cast<int>(t));
      rep.max_violation = std::max(rep.max_violation, violation);
    }
  }
  return rep;
}

}  // namespace diqkd

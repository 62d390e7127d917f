#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace diqkd {

/// Two-party Bell scenario: number of settings and outcomes per side.
struct Scenario {
  int inputs_a = 0;
  int inputs_b = 0;
  int outputs_a = 0;
  int outputs_b = 0;

  bool operator==(const Scenario&) const = default;

  int table_size() const { return inputs_a * inputs_b * outputs_a * outputs_b; }

  /// Flat index of (a, b, x, y), layout [x][y][a][b].
  int index(int a, int b, int x, int y) const {
    return ((x * inputs_b + y) * outputs_a + a) * outputs_b + b;
  }

  void validate() const;
};

/// Bell inequality sum g_abxy q(ab|xy) <= local_bound.
struct BellInequality {
  Scenario scenario;
  std::vector<double> coefficients;  // indexed via scenario.index
  double local_bound = 0.0;
  std::optional<double> quantum_bound;  // SDP-certified upper bound, if known
  std::string name;

  double coeff(int a, int b, int x, int y) const {
    return coefficients[scenario.index(a, b, x, y)];
  }
  double& coeff(int a, int b, int x, int y) {
    return coefficients[scenario.index(a, b, x, y)];
  }
};

enum class TableKind { ExactDistribution, EmpiricalFrequency };

/// Conditional distribution q(ab|xy). Empirical tables keep integer counts
/// and produce frequencies only on read, so Bell values on data are exact
/// count ratios evaluated in floating point at the end.
class CorrelationTable {
 public:
  CorrelationTable() = default;

  /// Exact distribution; per-(x,y) blocks must sum to 1 within 1e-12.
  static CorrelationTable exact(const Scenario& s, std::vector<double> values);

  /// Empirical table from per-(a,b,x,y) counts.
  static CorrelationTable empirical(const Scenario& s,
                                    std::vector<std::int64_t> counts);

  const Scenario& scenario() const { return scenario_; }
  TableKind kind() const { return kind_; }

  double value(int a, int b, int x, int y) const;
  std::int64_t count(int a, int b, int x, int y) const;
  std::int64_t pair_total(int x, int y) const;

  const std::vector<std::int64_t>& counts() const { return counts_; }

 private:
  Scenario scenario_;
  TableKind kind_ = TableKind::ExactDistribution;
  std::vector<double> values_;         // exact kind
  std::vector<std::int64_t> counts_;   // empirical kind
  std::vector<std::int64_t> totals_;   // per (x,y), empirical kind
};

/// Uniform table q(ab|xy) = 1/(oa*ob).
CorrelationTable uniform_table(const Scenario& s);

/// Point distribution of a deterministic strategy (x->a, y->b).
CorrelationTable deterministic_table(const Scenario& s,
                                     const std::vector<int>& alice_strategy,
                                     const std::vector<int>& bob_strategy);

/// Sum g_abxy q(ab|xy). Throws on scenario mismatch.
double bell_value(const BellInequality& ineq, const CorrelationTable& table);

/// Exact local bound by enumeration of deterministic strategies.
/// Guard: outputs_a^inputs_a * outputs_b^inputs_b <= 1e7 strategy pairs.
/// Parallel over Alice-strategy blocks; result independent of thread count.
double local_bound(const BellInequality& ineq);

/// Serial reference implementation of the same enumeration.
double local_bound_serial(const BellInequality& ineq);

/// Chained inequality on n inputs per side (2 outputs), indices mod n.
/// For n=2 the coefficient tensor equals CHSH up to input/output relabeling.
BellInequality build_chained(int n);

/// CHSH: sum (-1)^(a+b+xy) q(ab|xy) <= 2.
BellInequality build_chsh();

/// CGLMP inequality with d=3 outcomes, probability form, local bound 2.
/// Construction fails loudly if the recomputed local bound differs.
BellInequality build_cglmp3();

/// Named builder: "chsh", "cglmp3", "chained(n)" (also accepts "chainedN").
BellInequality build_named(const std::string& name);

/// JSON inequality file IO:
/// {scenario:{xa,xb,oa,ob}, terms:[[a,b,x,y,coeff],...], local_bound?:number}
BellInequality read_inequality_json(const std::string& path);
void write_inequality_json(const BellInequality& ineq, const std::string& path);

}  // namespace diqkd

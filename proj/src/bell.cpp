#include "diqkd/bell.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace diqkd {

void Scenario::validate() const {
  if (inputs_a < 1 || inputs_b < 1 || outputs_a < 1 || outputs_b < 1) {
    throw std::invalid_argument("Scenario: all counts must be >= 1");
  }
}

CorrelationTable CorrelationTable::exact(const Scenario& s,
                                         std::vector<double> values) {
  s.validate();
  if (static_cast<int>(values.size()) != s.table_size()) {
    throw std::invalid_argument("CorrelationTable: value tensor shape mismatch");
  }
  for (double v : values) {
    if (v < -1e-12) {
      throw std::invalid_argument("CorrelationTable: negative probability");
    }
  }
  for (int x = 0; x < s.inputs_a; ++x) {
    for (int y = 0; y < s.inputs_b; ++y) {
      double sum = 0.0;
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b) sum += values[s.index(a, b, x, y)];
      if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument(
            "CorrelationTable: block (" + std::to_string(x) + "," +
            std::to_string(y) + ") sums to " + std::to_string(sum));
      }
    }
  }
  CorrelationTable t;
  t.scenario_ = s;
  t.kind_ = TableKind::ExactDistribution;
  t.values_ = std::move(values);
  return t;
}

CorrelationTable CorrelationTable::empirical(const Scenario& s,
                                             std::vector<std::int64_t> counts) {
  s.validate();
  if (static_cast<int>(counts.size()) != s.table_size()) {
    throw std::invalid_argument("CorrelationTable: count tensor shape mismatch");
  }
  for (auto c : counts) {
    if (c < 0) throw std::invalid_argument("CorrelationTable: negative count");
  }
  CorrelationTable t;
  t.scenario_ = s;
  t.kind_ = TableKind::EmpiricalFrequency;
  t.counts_ = std::move(counts);
  t.totals_.assign(s.inputs_a * s.inputs_b, 0);
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y) {
      std::int64_t tot = 0;
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b) tot += t.counts_[s.index(a, b, x, y)];
      t.totals_[x * s.inputs_b + y] = tot;
    }
  return t;
}

double CorrelationTable::value(int a, int b, int x, int y) const {
  if (kind_ == TableKind::ExactDistribution) {
    return values_[scenario_.index(a, b, x, y)];
  }
  std::int64_t tot = totals_[x * scenario_.inputs_b + y];
  if (tot == 0) return 0.0;
  return static_cast<double>(counts_[scenario_.index(a, b, x, y)]) /
         static_cast<double>(tot);
}

std::int64_t CorrelationTable::count(int a, int b, int x, int y) const {
  if (kind_ != TableKind::EmpiricalFrequency) {
    throw std::logic_error("count() requires an empirical table");
  }
  return counts_[scenario_.index(a, b, x, y)];
}

std::int64_t CorrelationTable::pair_total(int x, int y) const {
  if (kind_ != TableKind::EmpiricalFrequency) {
    throw std::logic_error("pair_total() requires an empirical table");
  }
  return totals_[x * scenario_.inputs_b + y];
}

CorrelationTable uniform_table(const Scenario& s) {
  double p = 1.0 / (s.outputs_a * s.outputs_b);
  return CorrelationTable::exact(s, std::vector<double>(s.table_size(), p));
}

CorrelationTable deterministic_table(const Scenario& s,
                                     const std::vector<int>& alice_strategy,
                                     const std::vector<int>& bob_strategy) {
  if (static_cast<int>(alice_strategy.size()) != s.inputs_a ||
      static_cast<int>(bob_strategy.size()) != s.inputs_b) {
    throw std::invalid_argument("deterministic_table: strategy length mismatch");
  }
  std::vector<double> v(s.table_size(), 0.0);
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y)
      v[s.index(alice_strategy[x], bob_strategy[y], x, y)] = 1.0;
  return CorrelationTable::exact(s, std::move(v));
}

double bell_value(const BellInequality& ineq, const CorrelationTable& table) {
  // the table may expose extra inputs (e.g. a raw-key setting) beyond the
  // inequality's scenario; only the inequality's block is read
  const Scenario& s = ineq.scenario;
  const Scenario& t = table.scenario();
  if (t.inputs_a < s.inputs_a || t.inputs_b < s.inputs_b ||
      t.outputs_a != s.outputs_a || t.outputs_b != s.outputs_b) {
    throw std::invalid_argument("bell_value: table does not cover inequality");
  }
  double g = 0.0;
  if (table.kind() == TableKind::EmpiricalFrequency) {
    // accumulate integer-weighted sums per (x,y), divide once at the end
    for (int x = 0; x < s.inputs_a; ++x)
      for (int y = 0; y < s.inputs_b; ++y) {
        std::int64_t tot = table.pair_total(x, y);
        if (tot == 0) continue;
        double num = 0.0;
        for (int a = 0; a < s.outputs_a; ++a)
          for (int b = 0; b < s.outputs_b; ++b)
            num += ineq.coeff(a, b, x, y) *
                   static_cast<double>(table.count(a, b, x, y));
        g += num / static_cast<double>(tot);
      }
    return g;
  }
  for (int x = 0; x < s.inputs_a; ++x)
    for (int y = 0; y < s.inputs_b; ++y)
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b)
          g += ineq.coeff(a, b, x, y) * table.value(a, b, x, y);
  return g;
}

namespace {

// Best Bob response to a fixed Alice strategy; equals the max over all Bob
// deterministic strategies of the joint Bell value.
double best_bob_response(const BellInequality& ineq,
                         const std::vector<int>& alice) {
  const Scenario& s = ineq.scenario;
  double total = 0.0;
  for (int y = 0; y < s.inputs_b; ++y) {
    double best = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < s.outputs_b; ++b) {
      double v = 0.0;
      for (int x = 0; x < s.inputs_a; ++x) v += ineq.coeff(alice[x], b, x, y);
      best = std::max(best, v);
    }
    total += best;
  }
  return total;
}

void strategy_from_index(std::int64_t idx, int inputs, int outputs,
                         std::vector<int>& out) {
  out.resize(inputs);
  for (int x = 0; x < inputs; ++x) {
    out[x] = static_cast<int>(idx % outputs);
    idx /= outputs;
  }
}

std::int64_t checked_pow(int base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > (std::int64_t{1} << 60)) return std::int64_t{1} << 60;
  }
  return r;
}

void enumeration_guard(const Scenario& s) {
  std::int64_t na = checked_pow(s.outputs_a, s.inputs_a);
  std::int64_t nb = checked_pow(s.outputs_b, s.inputs_b);
  if (na > 10'000'000 || nb > 10'000'000 || na * nb > 10'000'000) {
    throw std::runtime_error("local_bound: scenario too large for brute force");
  }
}

}  // namespace

double local_bound_serial(const BellInequality& ineq) {
  const Scenario& s = ineq.scenario;
  enumeration_guard(s);
  std::int64_t na = checked_pow(s.outputs_a, s.inputs_a);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> alice;
  for (std::int64_t i = 0; i < na; ++i) {
    strategy_from_index(i, s.inputs_a, s.outputs_a, alice);
    best = std::max(best, best_bob_response(ineq, alice));
  }
  return best;
}

double local_bound(const BellInequality& ineq) {
  const Scenario& s = ineq.scenario;
  enumeration_guard(s);
  std::int64_t na = checked_pow(s.outputs_a, s.inputs_a);
  double best = -std::numeric_limits<double>::infinity();
#ifdef _OPENMP
#pragma omp parallel
  {
    double local_best = -std::numeric_limits<double>::infinity();
    std::vector<int> alice;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < na; ++i) {
      strategy_from_index(i, s.inputs_a, s.outputs_a, alice);
      local_best = std::max(local_best, best_bob_response(ineq, alice));
    }
#pragma omp critical
    best = std::max(best, local_best);
  }
#else
  best = local_bound_serial(ineq);
#endif
  return best;
}

BellInequality build_chsh() {
  BellInequality ineq;
  ineq.scenario = {2, 2, 2, 2};
  ineq.coefficients.assign(ineq.scenario.table_size(), 0.0);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          ineq.coeff(a, b, x, y) = ((a + b + x * y) % 2 == 0) ? 1.0 : -1.0;
  ineq.local_bound = local_bound(ineq);
  ineq.name = "chsh";
  return ineq;
}

BellInequality build_chained(int n) {
  if (n < 2) throw std::invalid_argument("build_chained: n must be >= 2");
  BellInequality ineq;
  ineq.scenario = {n, n, 2, 2};
  ineq.coefficients.assign(ineq.scenario.table_size(), 0.0);
  // terms (x, y) with y in {x-1, x} mod n; the wrapped pair (0, n-1) flips sign
  for (int x = 0; x < n; ++x) {
    for (int dy = -1; dy <= 0; ++dy) {
      int yi = x + dy;
      int delta = (yi == -1) ? 1 : 0;
      int y = (yi + n) % n;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          ineq.coeff(a, b, x, y) += ((a + b + delta) % 2 == 0) ? 1.0 : -1.0;
    }
  }
  ineq.local_bound = local_bound(ineq);
  ineq.name = "chained(" + std::to_string(n) + ")";
  return ineq;
}

BellInequality build_cglmp3() {
  constexpr int d = 3;
  BellInequality ineq;
  ineq.scenario = {2, 2, d, d};
  ineq.coefficients.assign(ineq.scenario.table_size(), 0.0);
  auto add = [&](int x, int y, int shift_b_minus_a, double sign) {
    // adds sign * P(b = a + shift mod d | x, y)
    for (int a = 0; a < d; ++a) {
      int b = ((a + shift_b_minus_a) % d + d) % d;
      ineq.coeff(a, b, x, y) += sign;
    }
  };
  // probability form, k=0 term of the CGLMP family (A1->x=0, A2->x=1, ...):
  //  + P(A1=B1) + P(B1=A2+1) + P(A2=B2) + P(B2=A1)
  //  - P(A1=B1-1) - P(B1=A2) - P(A2=B2-1) - P(B2=A1-1)
  add(0, 0, 0, +1.0);   // P(A1=B1)
  add(1, 0, +1, +1.0);  // P(B1=A2+1)
  add(1, 1, 0, +1.0);   // P(A2=B2)
  add(0, 1, 0, +1.0);   // P(B2=A1)
  add(0, 0, +1, -1.0);  // P(A1=B1-1), i.e. b = a+1
  add(1, 0, 0, -1.0);   // P(B1=A2)
  add(1, 1, +1, -1.0);  // P(A2=B2-1), i.e. b = a+1
  add(0, 1, -1, -1.0);  // P(B2=A1-1)
  double lb = local_bound(ineq);
  if (std::abs(lb - 2.0) > 1e-9) {
    throw std::runtime_error(
        "build_cglmp3: recomputed local bound " + std::to_string(lb) +
        " does not match normalization target 2");
  }
  ineq.local_bound = lb;
  ineq.name = "cglmp3";
  return ineq;
}

BellInequality build_named(const std::string& name) {
  if (name == "chsh") return build_chsh();
  if (name == "cglmp3") return build_cglmp3();
  if (name.rfind("chained", 0) == 0) {
    std::string rest = name.substr(7);
    if (!rest.empty() && rest.front() == '(' && rest.back() == ')') {
      rest = rest.substr(1, rest.size() - 2);
    }
    try {
      size_t pos = 0;
      int n = std::stoi(rest, &pos);
      if (pos == rest.size()) return build_chained(n);
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("build_named: unknown inequality '" + name + "'");
}

BellInequality read_inequality_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open inequality file: " + path);
  nlohmann::json j;
  in >> j;
  BellInequality ineq;
  const auto& sc = j.at("scenario");
  ineq.scenario = {sc.at("xa").get<int>(), sc.at("xb").get<int>(),
                   sc.at("oa").get<int>(), sc.at("ob").get<int>()};
  ineq.scenario.validate();
  ineq.coefficients.assign(ineq.scenario.table_size(), 0.0);
  for (const auto& term : j.at("terms")) {
    if (!term.is_array() || term.size() != 5) {
      throw std::runtime_error("inequality term must be [a,b,x,y,coeff]");
    }
    int a = term[0].get<int>(), b = term[1].get<int>();
    int x = term[2].get<int>(), y = term[3].get<int>();
    if (a < 0 || a >= ineq.scenario.outputs_a || b < 0 ||
        b >= ineq.scenario.outputs_b || x < 0 || x >= ineq.scenario.inputs_a ||
        y < 0 || y >= ineq.scenario.inputs_b) {
      throw std::runtime_error("inequality term index out of range");
    }
    ineq.coeff(a, b, x, y) += term[4].get<double>();
  }
  bool feasible = true;
  double lb = 0.0;
  try {
    lb = local_bound(ineq);
  } catch (const std::runtime_error&) {
    feasible = false;
  }
  if (j.contains("local_bound")) {
    double stated = j["local_bound"].get<double>();
    if (feasible && std::abs(stated - lb) > 1e-9) {
      throw std::runtime_error("inequality file local_bound " +
                               std::to_string(stated) +
                               " disagrees with enumeration " +
                               std::to_string(lb));
    }
    ineq.local_bound = feasible ? lb : stated;
  } else if (feasible) {
    ineq.local_bound = lb;
  } else {
    throw std::runtime_error(
        "inequality too large for brute force and no local_bound given");
  }
  if (j.contains("name")) ineq.name = j["name"].get<std::string>();
  return ineq;
}

void write_inequality_json(const BellInequality& ineq,
                           const std::string& path) {
  nlohmann::json j;
  j["scenario"] = {{"xa", ineq.scenario.inputs_a},
                   {"xb", ineq.scenario.inputs_b},
                   {"oa", ineq.scenario.outputs_a},
                   {"ob", ineq.scenario.outputs_b}};
  auto terms = nlohmann::json::array();
  const Scenario& s = ineq.scenario;
  for (int a = 0; a < s.outputs_a; ++a)
    for (int b = 0; b < s.outputs_b; ++b)
      for (int x = 0; x < s.inputs_a; ++x)
        for (int y = 0; y < s.inputs_b; ++y) {
          double c = ineq.coeff(a, b, x, y);
          if (c != 0.0) terms.push_back({a, b, x, y, c});
        }
  j["terms"] = std::move(terms);
  j["local_bound"] = ineq.local_bound;
  if (!ineq.name.empty()) j["name"] = ineq.name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write inequality file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace diqkd

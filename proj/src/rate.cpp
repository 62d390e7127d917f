#include "diqkd/rate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <ostream>
#include <stdexcept>

#include "diqkd/quantum.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace diqkd {

double TradeoffCurve::eval(double g_exp) const {
  double best = 1.0;
  for (const LinearBound& c : certificates) {
    best = std::min(best, c.eval(g_exp));
  }
  return std::clamp(best, floor, 1.0);
}

double f_chsh_analytic(double g) {
  if (g < 2.0) return 1.0;  // no constraint below the local bound
  if (g > 2.0 * std::sqrt(2.0) + 1e-9) {
    throw std::domain_error("f_chsh_analytic: g beyond the quantum maximum");
  }
  double rad = std::max(0.0, 2.0 - g * g / 4.0);
  return 0.5 + 0.5 * std::sqrt(rad);
}

LinearBound linearize_chsh(double g0) {
  double rad = 2.0 - g0 * g0 / 4.0;
  if (rad <= 0.0) {
    throw std::domain_error("linearize_chsh: g0 beyond the quantum maximum");
  }
  LinearBound lb;
  lb.g0 = g0;
  lb.nu = -g0 / (8.0 * std::sqrt(rad));
  lb.mu = f_chsh_analytic(g0) - lb.nu * g0;
  return lb;
}

namespace {

/// Replace f by its least concave majorant over the sampled abscissas
/// (upper convex hull). Returns the largest upward adjustment applied.
double concave_majorant(const std::vector<double>& g, std::vector<double>& f) {
  const int n = static_cast<int>(g.size());
  std::vector<int> hull;
  for (int i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      int a = hull[hull.size() - 2], b = hull.back();
      double cross = (g[b] - g[a]) * (f[i] - f[a]) -
                     (f[b] - f[a]) * (g[i] - g[a]);
      if (cross >= 0.0) {
        hull.pop_back();  // b lies below chord a--i
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  double max_lift = 0.0;
  for (size_t seg = 0; seg + 1 < hull.size(); ++seg) {
    int a = hull[seg], b = hull[seg + 1];
    for (int i = a + 1; i < b; ++i) {
      double t = (g[i] - g[a]) / (g[b] - g[a]);
      double lifted = f[a] + t * (f[b] - f[a]);
      max_lift = std::max(max_lift, lifted - f[i]);
      f[i] = lifted;
    }
  }
  return max_lift;
}

}  // namespace

TradeoffCurve build_curve(const BellInequality& ineq, NpaLevel level,
                          const std::vector<double>& grid, int a_target,
                          int x_raw) {
  if (grid.empty()) throw std::invalid_argument("build_curve: empty grid");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("build_curve: grid must be increasing");
  }
  TradeoffCurve curve;
  curve.floor = 1.0 / ineq.scenario.outputs_a;
  curve.local_bound = ineq.local_bound;
  curve.quantum_bound = quantum_max(ineq, level);
  curve.inequality_name = ineq.name;
  curve.source = "sdp(" + level_name(level) + ")";
  if (grid.front() < curve.local_bound - 1e-9 ||
      grid.back() > curve.quantum_bound + 1e-9) {
    throw std::invalid_argument(
        "build_curve: grid outside [local bound, quantum bound]");
  }

  RelaxationProblem prob = build(ineq, a_target, x_raw, level);
  const int k = static_cast<int>(grid.size());
  curve.g = grid;
  curve.f.resize(k);
  curve.certificates.resize(k);

  bool failed = false;
  std::string fail_msg;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < k; ++i) {
    try {
      PointResult pr = solve_point(prob, curve.g[i]);
      curve.f[i] = pr.value;
      curve.certificates[i] = pr.certificate;
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        fail_msg = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("build_curve: " + fail_msg);

  std::vector<double> repaired = curve.f;
  double lift = concave_majorant(curve.g, repaired);
  if (lift > 1e-5) {
    throw std::runtime_error(
        "build_curve: sampled curve deviates from concavity by " +
        std::to_string(lift));
  }
  if (lift > 1e-6) {
    std::cerr << "warning: flattened concavity wiggle of " << lift
              << " in sampled curve\n";
  }
  curve.f = std::move(repaired);
  for (size_t i = 1; i < curve.f.size(); ++i) {
    curve.f[i] = std::min(curve.f[i], curve.f[i - 1]);  // monotone envelope
  }
  return curve;
}

TradeoffCurve build_curve(const BellInequality& ineq, NpaLevel level, int k,
                          int a_target, int x_raw) {
  if (k < 2) throw std::invalid_argument("build_curve: need at least 2 points");
  double lo = ineq.local_bound;
  double hi = quantum_max(ineq, level) - 1e-7;  // keep strictly interior
  std::vector<double> grid(k);
  for (int i = 0; i < k; ++i) grid[i] = lo + (hi - lo) * i / (k - 1);
  return build_curve(ineq, level, grid, a_target, x_raw);
}

TradeoffCurve build_curve_analytic_chsh(int k) {
  if (k < 2) {
    throw std::invalid_argument("build_curve_analytic_chsh: need >= 2 points");
  }
  TradeoffCurve curve;
  curve.floor = 0.5;
  curve.local_bound = 2.0;
  curve.quantum_bound = 2.0 * std::sqrt(2.0);
  curve.inequality_name = "chsh";
  curve.source = "analytic-chsh";
  // the tangent slope diverges at 2*sqrt(2); stop the anchors just short
  const double lo = 2.0, hi = curve.quantum_bound - 1e-7;
  curve.g.resize(k);
  curve.f.resize(k);
  curve.certificates.resize(k);
  for (int i = 0; i < k; ++i) {
    double g = lo + (hi - lo) * i / (k - 1);
    curve.g[i] = g;
    curve.f[i] = f_chsh_analytic(g);
    curve.certificates[i] = linearize_chsh(g);
  }
  return curve;
}

MinEntropyReport min_entropy_bound(const TradeoffCurve& curve, double g_est,
                                   long long n_raw, long long n_est) {
  if (n_raw <= 0 || n_est <= 0) {
    throw std::invalid_argument("min_entropy_bound: round counts must be > 0");
  }
  MinEntropyReport rep;
  rep.g_est = g_est;
  rep.n_raw = n_raw;
  rep.n_est = n_est;
  rep.f_at_g = curve.eval(g_est);
  rep.correction = std::pow(static_cast<double>(n_est), -0.25);
  rep.f_corrected = std::min(1.0, rep.f_at_g + rep.correction);
  rep.p_guess_bound =
      std::pow(rep.f_corrected, static_cast<double>(n_raw));
  rep.h_min = -static_cast<double>(n_raw) * std::log2(rep.f_corrected);
  rep.rate = rep.h_min / static_cast<double>(n_raw);
  return rep;
}

double key_rate(const TradeoffCurve& curve, double g, double cond_entropy) {
  return -std::log2(curve.eval(g)) - cond_entropy;
}

double key_rate_chsh(double v) {
  double rad = std::max(0.0, 2.0 - 2.0 * v * v);
  return 1.0 - std::log2(1.0 + std::sqrt(rad)) -
         binary_entropy((1.0 - v) / 2.0);
}

namespace {
void put(std::ostream& os, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  os << buf;
}
}  // namespace

void write_curve_csv(const TradeoffCurve& curve, std::ostream& os) {
  os << "g,f,mu,nu\n";
  for (size_t i = 0; i < curve.g.size(); ++i) {
    put(os, curve.g[i]); os << ',';
    put(os, curve.f[i]); os << ',';
    put(os, curve.certificates[i].mu); os << ',';
    put(os, curve.certificates[i].nu); os << '\n';
  }
}

void write_keyrate_csv(const std::vector<KeyRatePoint>& pts,
                       std::ostream& os) {
  os << "v,qber,g,rate\n";
  for (const KeyRatePoint& p : pts) {
    put(os, p.v); os << ',';
    put(os, p.qber); os << ',';
    put(os, p.g); os << ',';
    put(os, p.rate); os << '\n';
  }
}

}  // namespace diqkd

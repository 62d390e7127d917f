#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"
#include "diqkd/linear_bound.hpp"
#include "diqkd/npa.hpp"

namespace diqkd {

/// Piecewise-linear upper envelope on the adversary's guessing probability as
/// a function of the Bell expectation. Each sampled point carries a linear
/// certificate mu + nu*g that dominates the whole curve.
struct TradeoffCurve {
  std::vector<double> g;       // sample abscissas, increasing
  std::vector<double> f;       // bound value at each abscissa
  std::vector<LinearBound> certificates;
  double floor = 0.5;          // 1/outputs_a: trivial guessing probability
  double local_bound = 0.0;
  double quantum_bound = 0.0;
  std::string inequality_name;
  std::string source;          // "analytic-chsh" or "sdp(level)"

  /// min over certificates of mu + nu*g, clamped to [floor, 1].
  double eval(double g_exp) const;
};

/// Exact curve for the CHSH inequality: 1/2 + 1/2*sqrt(2 - g^2/4).
double f_chsh_analytic(double g);

/// Tangent line to the analytic CHSH curve at g0.
LinearBound linearize_chsh(double g0);

/// Samples the relaxation on the given increasing grid of Bell values
/// (inside [local bound, quantum bound]). Points are solved in parallel.
/// Non-monotone or non-concave wiggles up to 1e-6 are flattened to the least
/// concave majorant with a warning on stderr; larger violations throw.
TradeoffCurve build_curve(const BellInequality& ineq, NpaLevel level,
                          const std::vector<double>& grid, int a_target = 0,
                          int x_raw = 0);

/// Convenience overload: even grid of k points between the local bound and
/// the SDP quantum maximum.
TradeoffCurve build_curve(const BellInequality& ineq, NpaLevel level, int k,
                          int a_target = 0, int x_raw = 0);

/// Analytic CHSH curve with tangent certificates (anchors kept strictly away
/// from 2*sqrt(2) where the derivative blows up).
TradeoffCurve build_curve_analytic_chsh(int k);

struct MinEntropyReport {
  double g_est = 0.0;
  double f_at_g = 1.0;         // f(g_est) from the certificate envelope
  long long n_raw = 0;
  long long n_est = 0;
  double correction = 0.0;     // n_est^{-1/4}
  double f_corrected = 1.0;    // min(1, f_at_g + correction)
  double p_guess_bound = 1.0;  // f_corrected^n_raw (underflows to 0 for big N)
  double h_min = 0.0;          // -n_raw * log2(f_corrected)
  double rate = 0.0;           // h_min / n_raw
};

/// Finite-statistics min-entropy bound for N raw rounds with n_est
/// estimation rounds.
MinEntropyReport min_entropy_bound(const TradeoffCurve& curve, double g_est,
                                   long long n_raw, long long n_est);

/// Asymptotic key rate r = -log2 f(g) - H(a|b).
double key_rate(const TradeoffCurve& curve, double g, double cond_entropy);

/// Closed-form CHSH key rate at visibility v for the optimal qubit devices.
double key_rate_chsh(double v);

struct VisibilityResult {
  double v_critical = 0.0;
  double qber_critical = 0.0;  // (1 - v_critical) / 2
  bool bracketed = false;      // false: no sign change on [v_lo, v_hi]
  double rate_lo = 0.0;
  double rate_hi = 0.0;
};

/// Bisection for the visibility where the key rate crosses zero.
/// `rate_at` must be monotone increasing in v on the bracket.
template <typename F>
VisibilityResult critical_visibility(F&& rate_at, double v_lo = 0.5,
                                     double v_hi = 1.0, double tol = 1e-6) {
  VisibilityResult res;
  res.rate_lo = rate_at(v_lo);
  res.rate_hi = rate_at(v_hi);
  if (res.rate_lo > 0.0 || res.rate_hi < 0.0) {
    res.bracketed = false;
    res.v_critical = res.rate_lo > 0.0 ? v_lo : v_hi;
    res.qber_critical = (1.0 - res.v_critical) / 2.0;
    return res;
  }
  res.bracketed = true;
  double lo = v_lo, hi = v_hi;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (rate_at(mid) >= 0.0 ? hi : lo) = mid;
  }
  res.v_critical = 0.5 * (lo + hi);
  res.qber_critical = (1.0 - res.v_critical) / 2.0;
  return res;
}

/// CSV with header "g,f,mu,nu", 12 significant digits.
void write_curve_csv(const TradeoffCurve& curve, std::ostream& os);

/// CSV with header "v,qber,g,rate", 12 significant digits.
struct KeyRatePoint {
  double v = 0.0;
  double qber = 0.0;
  double g = 0.0;
  double rate = 0.0;
};
void write_keyrate_csv(const std::vector<KeyRatePoint>& pts, std::ostream& os);

}  // namespace diqkd

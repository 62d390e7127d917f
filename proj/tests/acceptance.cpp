// Acceptance suite: one [PASS]/[FAIL] line per criterion.
// Exit code equals the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"
#include "diqkd/ncpoly.hpp"
#include "diqkd/npa.hpp"
#include "diqkd/protocol.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/rate.hpp"
#include "diqkd/sdp.hpp"

using namespace diqkd;

namespace {

const double kQmax = 2.0 * std::sqrt(2.0);

int g_failures = 0;

void report(int idx, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void report_error(int idx, const std::exception& e) {
  report(idx, false, std::string("exception: ") + e.what());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// Key-rate point for a device preset at visibility v, evaluated against a
// fixed tradeoff curve.
struct SweepPoint {
  double g = 0.0;
  double qber = 0.0;
  double rate = 0.0;
};

SweepPoint sweep_point(const std::string& preset_name, double v,
                       const TradeoffCurve& curve) {
  DevicePreset p = make_preset(preset_name + "-optimal", v);
  auto table = correlations(p.rho, p.alice, p.bob);
  SweepPoint pt;
  pt.g = bell_value(p.ineq, table);
  auto es = raw_key_statistics(table, p.x_raw, p.y_raw);
  pt.qber = es.qber;
  pt.rate = key_rate(curve, pt.g, es.cond_entropy);
  return pt;
}

// Random two-qubit device in the CHSH scenario: Haar-ish random pure state
// and random projective qubit measurements on each side.
CorrelationTable random_quantum_table(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  Eigen::VectorXcd psi(4);
  for (int i = 0; i < 4; ++i) psi(i) = {gauss(rng), gauss(rng)};
  psi.normalize();
  DensityMatrix rho(psi * psi.adjoint());
  MeasurementSet alice(2, {qubit_projectors(ang(rng)), qubit_projectors(ang(rng))});
  MeasurementSet bob(2, {qubit_projectors(ang(rng)), qubit_projectors(ang(rng))});
  return correlations(rho, alice, bob);
}

}  // namespace

// 1. Level-2 CHSH relaxation on a 50-point grid over [2, 2*sqrt(2)]:
//    analytic <= sdp <= analytic + 1e-3.
void criterion1() {
  try {
    auto t0 = std::chrono::steady_clock::now();
    auto chsh = build_chsh();
    auto prob = build(chsh, 0, 0, NpaLevel::Two);
    double worst_low = 0.0, worst_high = 0.0;
    bool ok = true;
    for (int i = 0; i < 50; ++i) {
      double g = 2.0 + (kQmax - 2.0) * i / 49.0;
      double sdp = solve_point(prob, g).value;
      double ana = f_chsh_analytic(g);
      worst_low = std::min(worst_low, sdp - ana);
      worst_high = std::max(worst_high, sdp - ana);
      if (sdp < ana || sdp > ana + 1e-3) ok = false;
    }
    report(1, ok,
           fmt("chsh level-2 vs analytic on 50 points: deviation in "
               "[%.2e, %.2e], allowed [0, 1e-3], %.1fs",
               worst_low, worst_high, seconds_since(t0)));
  } catch (const std::exception& e) {
    report_error(1, e);
  }
}

// 2. Operator sum-of-squares identity: residual < 1e-12 on 50 anchors in
//    [2, 2*sqrt(2) - 1e-3].
void criterion2() {
  try {
    auto residuals = verify_chsh_sos_grid(50);
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, r);
    report(2, worst < 1e-12,
           fmt("sos identity max residual %.2e over 50 anchors (< 1e-12)",
               worst));
  } catch (const std::exception& e) {
    report_error(2, e);
  }
}

// 3. Tightness family saturates the analytic bound: P(a=0|x=0) within 1e-9
//    and the Bell value within 1e-10, at 50 g-values.
void criterion3() {
  try {
    auto chsh = build_chsh();
    double worst_p = 0.0, worst_g = 0.0;
    for (int i = 0; i < 50; ++i) {
      double g = 2.0 + (kQmax - 2.0) * i / 49.0;
      auto model = tightness_family(g);
      auto table = correlations(model.rho, model.alice, model.bob);
      double p0 = table.value(0, 0, 0, 0) + table.value(0, 1, 0, 0);
      worst_p = std::max(worst_p, std::abs(p0 - f_chsh_analytic(g)));
      worst_g = std::max(worst_g, std::abs(bell_value(chsh, table) - g));
    }
    report(3, worst_p <= 1e-9 && worst_g <= 1e-10,
           fmt("tightness family: |P - f| <= %.2e (1e-9), |g - target| <= "
               "%.2e (1e-10)",
               worst_p, worst_g));
  } catch (const std::exception& e) {
    report_error(3, e);
  }
}

// 4. Critical QBER from the SDP curves: CHSH at 5.0% +- 0.3%,
//    chained n=3 at 7.5% +- 0.5%.
void criterion4() {
  try {
    auto t0 = std::chrono::steady_clock::now();
    DevicePreset chsh_ref = make_preset("chsh-optimal", 1.0);
    auto chsh_curve =
        build_curve(chsh_ref.ineq, NpaLevel::Two, 25, 0, chsh_ref.x_raw);
    auto chsh_crit = critical_visibility(
        [&](double v) { return sweep_point("chsh", v, chsh_curve).rate; },
        0.8, 1.0);

    DevicePreset ch3_ref = make_preset("chained3-optimal", 1.0);
    auto ch3_curve =
        build_curve(ch3_ref.ineq, NpaLevel::Two, 25, 0, ch3_ref.x_raw);
    auto ch3_crit = critical_visibility(
        [&](double v) { return sweep_point("chained3", v, ch3_curve).rate; },
        0.8, 1.0);

    bool chsh_ok = chsh_crit.bracketed &&
                   std::abs(chsh_crit.qber_critical - 0.050) <= 0.003;
    bool ch3_ok = ch3_crit.bracketed &&
                  std::abs(ch3_crit.qber_critical - 0.075) <= 0.005;
    report(4, chsh_ok && ch3_ok,
           fmt("critical qber: chsh %.4f%% (target 5.0 +- 0.3 -> %s), "
               "chained3 %.4f%% (target 7.5 +- 0.5 -> %s), %.1fs",
               100.0 * chsh_crit.qber_critical, chsh_ok ? "ok" : "out",
               100.0 * ch3_crit.qber_critical, ch3_ok ? "ok" : "out",
               seconds_since(t0)));
  } catch (const std::exception& e) {
    report_error(4, e);
  }
}

// 5. Quantum maxima: 2*sqrt(2) +- 1e-6 (CHSH level 1), 3*sqrt(3) +- 1e-4
//    (chained n=3), each achieved by an explicit device within 1e-8.
void criterion5() {
  try {
    auto chsh = build_chsh();
    auto ch3 = build_chained(3);
    double q_chsh = quantum_max(chsh, NpaLevel::One);
    double q_ch3 = quantum_max(ch3, NpaLevel::One);

    DevicePreset p1 = make_preset("chsh-optimal", 1.0);
    double a_chsh = bell_value(p1.ineq, correlations(p1.rho, p1.alice, p1.bob));
    DevicePreset p2 = make_preset("chained3-optimal", 1.0);
    double a_ch3 = bell_value(p2.ineq, correlations(p2.rho, p2.alice, p2.bob));

    bool ok = std::abs(q_chsh - kQmax) <= 1e-6 &&
              std::abs(q_ch3 - 3.0 * std::sqrt(3.0)) <= 1e-4 &&
              std::abs(a_chsh - kQmax) <= 1e-8 &&
              std::abs(a_ch3 - 3.0 * std::sqrt(3.0)) <= 1e-8;
    report(5, ok,
           fmt("quantum maxima: sdp chsh err %.2e (1e-6), chained3 err %.2e "
               "(1e-4); devices achieve within %.2e / %.2e (1e-8)",
               std::abs(q_chsh - kQmax), std::abs(q_ch3 - 3.0 * std::sqrt(3.0)),
               std::abs(a_chsh - kQmax),
               std::abs(a_ch3 - 3.0 * std::sqrt(3.0))));
  } catch (const std::exception& e) {
    report_error(5, e);
  }
}

// 6. Local bounds by enumeration: 2 for CHSH, parallel == serial for the
//    chained n=3 value, and the CGLMP construction self-checks to 2.
void criterion6() {
  try {
    auto chsh = build_chsh();
    auto ch3 = build_chained(3);
    double lb_chsh = local_bound(chsh);
    double lb_ch3 = local_bound(ch3);
    double lb_ch3_serial = local_bound_serial(ch3);
    bool cglmp_ok = true;
    double lb_cglmp = 0.0;
    try {
      lb_cglmp = build_cglmp3().local_bound;  // construction self-checks
      cglmp_ok = lb_cglmp == 2.0;
    } catch (const std::exception&) {
      cglmp_ok = false;
    }
    bool ok = lb_chsh == 2.0 && lb_ch3 == lb_ch3_serial && lb_ch3 == 4.0 &&
              cglmp_ok;
    report(6, ok,
           fmt("local bounds: chsh %g, chained3 %g (serial %g), cglmp3 %g",
               lb_chsh, lb_ch3, lb_ch3_serial, lb_cglmp));
  } catch (const std::exception& e) {
    report_error(6, e);
  }
}

// 7. Visibility rate formula: the curve-based rate on the optimal CHSH
//    devices matches R(v) = 1 - log2(1 + sqrt(2 - 2v^2)) - h((1-v)/2) within
//    1e-9 at 100 sampled v; R(1) = 1 within 1e-12.
void criterion7() {
  try {
    double worst = 0.0;
    for (int i = 0; i <= 99; ++i) {
      double v = 0.8 + 0.2 * i / 99.0;
      DevicePreset p = make_preset("chsh-optimal", v);
      auto table = correlations(p.rho, p.alice, p.bob);
      double g = bell_value(p.ineq, table);
      auto es = raw_key_statistics(table, p.x_raw, p.y_raw);
      double rate = -std::log2(f_chsh_analytic(g)) - es.cond_entropy;
      worst = std::max(worst, std::abs(rate - key_rate_chsh(v)));
    }
    double r1_err = std::abs(key_rate_chsh(1.0) - 1.0);
    report(7, worst <= 1e-9 && r1_err <= 1e-12,
           fmt("rate formula: max |rate - R(v)| %.2e (1e-9), |R(1)-1| %.2e "
               "(1e-12)",
               worst, r1_err));
  } catch (const std::exception& e) {
    report_error(7, e);
  }
}

// 8. Protocol statistics at N = 1e6, N_est = 1e3, v = 0.95 over 20 seeds:
//    mean g_est within 3 combined standard errors of 2*sqrt(2)*0.95 and
//    key_len/N within 0.05 of the finite-size prediction.
void criterion8() {
  try {
    auto t0 = std::chrono::steady_clock::now();
    const double v = 0.95;
    const long long n_raw = 1000000, n_est = 1000;
    DevicePreset p = make_preset("chsh-optimal", v);
    auto table = correlations(p.rho, p.alice, p.bob);
    auto curve = build_curve_analytic_chsh(50);

    double sum_g = 0.0, sum_var = 0.0, sum_frac = 0.0;
    const int runs = 20;
    for (int s = 1; s <= runs; ++s) {
      ProtocolConfig cfg;
      cfg.n_raw = n_raw;
      cfg.n_est = n_est;
      cfg.x_raw = p.x_raw;
      cfg.y_raw = p.y_raw;
      cfg.ineq = p.ineq;
      cfg.table = table;
      cfg.curve = &curve;
      cfg.seed = static_cast<std::uint64_t>(s);
      auto out = run(cfg);
      sum_g += out.g_est;
      sum_var += out.std_error * out.std_error;
      sum_frac += static_cast<double>(out.key_len) / n_raw;
    }
    double mean_g = sum_g / runs;
    double se_mean = std::sqrt(sum_var) / runs;
    double target_g = kQmax * v;
    double mean_frac = sum_frac / runs;

    // finite-size prediction for the extractable fraction
    long long slack = static_cast<long long>(
        std::ceil(2.0 * std::sqrt(static_cast<double>(n_raw))));
    double f_corr = std::min(
        1.0, f_chsh_analytic(target_g) +
                 std::pow(static_cast<double>(n_est), -0.25));
    double h_ab = binary_entropy((1.0 - v) / 2.0);
    double predicted = std::max(
        0.0, -std::log2(f_corr) - h_ab -
                 static_cast<double>(slack) / static_cast<double>(n_raw));

    bool g_ok = std::abs(mean_g - target_g) <= 3.0 * se_mean;
    bool frac_ok = std::abs(mean_frac - predicted) <= 0.05;
    report(8, g_ok && frac_ok,
           fmt("protocol stats over 20 runs: mean g_est %.4f vs %.4f "
               "(3 SE = %.4f -> %s); key fraction %.4f vs predicted %.4f "
               "(+- 0.05 -> %s), %.1fs",
               mean_g, target_g, 3.0 * se_mean, g_ok ? "ok" : "out", mean_frac,
               predicted, frac_ok ? "ok" : "out", seconds_since(t0)));
  } catch (const std::exception& e) {
    report_error(8, e);
  }
}

// 9. Property suites: curve concavity/monotonicity, certificate-envelope
//    soundness on 1e3 random quantum tables, SDP weak duality at the
//    optimum, and Toeplitz 2-universality Monte Carlo.
void criterion9() {
  try {
    std::string notes;
    bool ok = true;

    // (a) concavity / monotonicity of the sampled SDP curve
    auto chsh = build_chsh();
    auto curve = build_curve(chsh, NpaLevel::Two, 20);
    for (size_t i = 1; i < curve.f.size(); ++i) {
      if (curve.f[i] > curve.f[i - 1] + 1e-12) ok = false;
    }
    for (size_t i = 1; i + 1 < curve.f.size(); ++i) {
      if (curve.f[i + 1] - 2 * curve.f[i] + curve.f[i - 1] > 1e-7) ok = false;
    }
    notes += ok ? "concavity ok" : "concavity FAILED";

    // (b) certificate-envelope soundness on 1e3 random quantum tables
    std::mt19937_64 rng(20240817);
    std::vector<CorrelationTable> tables;
    tables.reserve(1000);
    for (int i = 0; i < 1000; ++i) tables.push_back(random_quantum_table(rng));
    double worst_violation = 0.0;
    for (const LinearBound& cert : curve.certificates) {
      auto rep = check_operator_inequality(cert, chsh, 0, tables);
      worst_violation = std::max(worst_violation, rep.max_violation);
      if (!rep.pass) ok = false;
    }
    notes += fmt("; envelope soundness worst violation %.2e", worst_violation);

    // (c) weak duality at the optimum of the relaxation SDPs (the solver may
    // stall just above its gap target; require near-convergence and allow
    // the dual to sit within numerical tolerance of the primal)
    auto prob = build(chsh, 0, 0, NpaLevel::Two);
    bool duality_ok = true;
    for (double g : {2.2, 2.5, 2.7}) {
      auto sol = solve(to_sdp(prob, g));
      bool converged = sol.status == SDPStatus::Optimal ||
                       (sol.status == SDPStatus::MaxIter && sol.gap <= 1e-6 &&
                        sol.primal_residual <= 1e-6);
      if (!converged || sol.dual_value < sol.primal_value - 1e-6) {
        duality_ok = false;
        notes += fmt("; weak duality FAILED at g=%g", g);
      }
    }
    if (duality_ok) notes += "; weak duality ok";
    ok = ok && duality_ok;

    // (d) Toeplitz 2-universality Monte Carlo (fixed distinct inputs, fresh
    // seed per trial)
    const std::size_t n = 64;
    auto draw = [](CounterRng& r, std::size_t len) {
      auto bv = BitVector::zeros(len);
      for (auto& w : bv.words) w = r.next_u64();
      if (len % 64) bv.words.back() &= (1ULL << (len % 64)) - 1;
      return bv;
    };
    CounterRng xr1(11, 0), xr2(11, 1);
    auto x1 = draw(xr1, n), x2 = draw(xr2, n);
    bool univ_ok = true;
    for (std::size_t m : {8, 16}) {
      CounterRng sr(2024, 2);
      int collisions = 0;
      const int trials = 100000;
      for (int t = 0; t < trials; ++t) {
        auto seed = draw(sr, m + n - 1);
        if (toeplitz_hash(x1, seed, m).words ==
            toeplitz_hash(x2, seed, m).words) {
          ++collisions;
        }
      }
      double rate = static_cast<double>(collisions) / trials;
      double bound = std::pow(2.0, -static_cast<double>(m)) * 1.05;
      if (rate > bound) {
        univ_ok = false;
        notes += fmt("; 2-universality FAILED at m=%zu (%.3e > %.3e)", m, rate,
                     bound);
      }
    }
    if (univ_ok) notes += "; 2-universality ok";
    ok = ok && univ_ok;

    report(9, ok, "property suites: " + notes);
  } catch (const std::exception& e) {
    report_error(9, e);
  }
}

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d of 9 criteria passed\n", 9 - g_failures);
  return g_failures;
}

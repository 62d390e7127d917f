// Command-line front end: tradeoff curves, key-rate sweeps, protocol
// simulation, SOS verification, and local bounds.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"
#include "diqkd/ncpoly.hpp"
#include "diqkd/npa.hpp"
#include "diqkd/protocol.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/rate.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using nlohmann::json;

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

json make_manifest(const std::string& command, const json& params,
                   const std::string& payload) {
  char digest[32];
  std::snprintf(digest, sizeof digest, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a(payload)));
  return json{{"command", command},
              {"parameters", params},
              {"version", kVersion},
              {"digest", digest}};
}

/// CSV goes to stdout (manifest appended as a trailing comment line) or to a
/// file with a side-car <file>.manifest.json.
void emit_csv(const std::string& command, const json& params,
              const std::string& payload, const std::string& out_path) {
  json manifest = make_manifest(command, params, payload);
  if (out_path.empty()) {
    std::cout << payload;
    std::cout << "# manifest: " << manifest.dump() << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + out_path);
    out << payload;
    std::ofstream mout(out_path + ".manifest.json", std::ios::binary);
    mout << manifest.dump(2) << "\n";
  }
}

diqkd::BellInequality load_inequality(const std::string& spec) {
  try {
    return diqkd::build_named(spec);
  } catch (const std::invalid_argument&) {
  }
  try {
    return diqkd::read_inequality_json(spec);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("bad inequality spec: ") +
                                e.what());
  }
}

struct PresetBundle {
  diqkd::DevicePreset preset;
  diqkd::CorrelationTable table;
};

PresetBundle load_preset(const std::string& name, double v) {
  diqkd::DevicePreset p = diqkd::make_preset(name + "-optimal", v);
  auto table = diqkd::correlations(p.rho, p.alice, p.bob);
  return PresetBundle{std::move(p), std::move(table)};
}

int cmd_curve(const std::string& ineq_spec, const std::string& level_str,
              int grid, bool analytic, const std::string& out_path) {
  diqkd::TradeoffCurve curve;
  if (analytic) {
    if (ineq_spec != "chsh") {
      throw std::invalid_argument("--analytic is only available for chsh");
    }
    curve = diqkd::build_curve_analytic_chsh(grid);
  } else {
    auto ineq = load_inequality(ineq_spec);
    auto level = diqkd::parse_level(level_str);
    curve = diqkd::build_curve(ineq, level, grid);
  }
  std::ostringstream os;
  diqkd::write_curve_csv(curve, os);
  json params = {{"ineq", ineq_spec},
                 {"level", analytic ? "analytic" : level_str},
                 {"grid", grid},
                 {"analytic", analytic}};
  emit_csv("curve", params, os.str(), out_path);
  return 0;
}

int cmd_keyrate(const std::string& preset_name, const std::string& level_str,
                bool analytic, double vmin, double vmax, int steps,
                int curve_grid, const std::string& out_path) {
  if (!(vmin < vmax) || vmin < 0.0 || vmax > 1.0) {
    throw std::invalid_argument("require 0 <= vmin < vmax <= 1");
  }
  if (steps < 2) throw std::invalid_argument("need at least 2 sweep steps");

  PresetBundle ref = load_preset(preset_name, 1.0);
  diqkd::TradeoffCurve curve;
  if (analytic) {
    if (preset_name != "chsh") {
      throw std::invalid_argument("--analytic is only available for chsh");
    }
    curve = diqkd::build_curve_analytic_chsh(curve_grid);
  } else {
    curve = diqkd::build_curve(ref.preset.ineq, diqkd::parse_level(level_str),
                               curve_grid, 0, ref.preset.x_raw);
  }

  auto point_at = [&](double v) {
    PresetBundle pb = load_preset(preset_name, v);
    diqkd::KeyRatePoint pt;
    pt.v = v;
    pt.g = diqkd::bell_value(pb.preset.ineq, pb.table);
    auto es = diqkd::raw_key_statistics(pb.table, pb.preset.x_raw,
                                        pb.preset.y_raw);
    pt.qber = es.qber;
    pt.rate = diqkd::key_rate(curve, pt.g, es.cond_entropy);
    return pt;
  };

  std::vector<diqkd::KeyRatePoint> pts;
  for (int i = 0; i < steps; ++i) {
    pts.push_back(point_at(vmin + (vmax - vmin) * i / (steps - 1)));
  }
  auto crit = diqkd::critical_visibility(
      [&](double v) { return point_at(v).rate; }, vmin, vmax);

  std::ostringstream os;
  diqkd::write_keyrate_csv(pts, os);
  char line[160];
  if (crit.bracketed) {
    std::snprintf(line, sizeof line, "# critical v=%.6f qber=%.6f\n",
                  crit.v_critical, crit.qber_critical);
  } else {
    std::snprintf(line, sizeof line,
                  "# no rate sign change on sweep: rate(%.4f)=%.6g "
                  "rate(%.4f)=%.6g\n",
                  vmin, crit.rate_lo, vmax, crit.rate_hi);
  }
  os << line;
  json params = {{"preset", preset_name},
                 {"level", analytic ? "analytic" : level_str},
                 {"vmin", vmin},
                 {"vmax", vmax},
                 {"steps", steps},
                 {"curve_grid", curve_grid}};
  emit_csv("keyrate", params, os.str(), out_path);
  return 0;
}

int cmd_simulate(const std::string& preset_name, double v, long long n_raw,
                 long long n_est, long long slack, std::uint64_t seed,
                 const std::string& level_str, int curve_grid,
                 const std::string& out_path) {
  PresetBundle pb = load_preset(preset_name, v);
  auto curve =
      diqkd::build_curve(pb.preset.ineq, diqkd::parse_level(level_str),
                         curve_grid, 0, pb.preset.x_raw);

  diqkd::ProtocolConfig cfg;
  cfg.n_raw = n_raw;
  cfg.n_est = n_est;
  cfg.x_raw = pb.preset.x_raw;
  cfg.y_raw = pb.preset.y_raw;
  cfg.ineq = pb.preset.ineq;
  cfg.table = pb.table;
  cfg.curve = &curve;
  cfg.seed = seed;
  cfg.slack_bits = slack;
  diqkd::ProtocolRun run = diqkd::run(cfg);
  if (run.sparse_estimation) {
    std::cerr << "warning: some (x,y) estimation cells drew zero samples; "
                 "g_est unreliable\n";
  }

  json params = {{"preset", preset_name}, {"v", v},
                 {"N", n_raw},            {"Nest", n_est},
                 {"slack", slack},        {"seed", seed},
                 {"level", level_str},    {"curve_grid", curve_grid}};
  json report = {
      {"g_est", run.g_est},
      {"std_error", run.std_error},
      {"qber_emp", run.qber_emp},
      {"h_min_bound", run.h_min_bound},
      {"n_pub", run.n_pub},
      {"key_len", run.key_len},
      {"key_hex", run.key.hex_prefix(64)},
      {"sparse_estimation", run.sparse_estimation},
  };
  report["manifest"] = make_manifest("simulate", params, report.dump());
  std::string payload = report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << payload;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + out_path);
    out << payload;
  }
  return 0;
}

int cmd_verify_sos(int grid, double g0) {
  double worst = 0.0;
  if (!std::isnan(g0)) {
    worst = diqkd::verify_chsh_sos(g0).max_abs_coeff();
    std::cout << "max residual at g0=" << g0 << ": " << worst << "\n";
  } else {
    auto residuals = diqkd::verify_chsh_sos_grid(grid);
    for (double r : residuals) worst = std::max(worst, r);
    std::cout << "max residual over " << grid << " anchor points: " << worst
              << "\n";
  }
  if (worst >= 1e-12) {
    std::cerr << "verification FAILED (residual >= 1e-12)\n";
    return 3;
  }
  return 0;
}

int cmd_local_bound(const std::string& ineq_spec) {
  auto ineq = load_inequality(ineq_spec);
  double lb = diqkd::local_bound(ineq);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", lb);
  std::cout << buf << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Device-independent QKD analysis: Bell-violation tradeoff curves, key "
      "rates, and protocol simulation.\nThread count follows OMP_NUM_THREADS."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // curve
  std::string c_ineq = "chsh", c_level = "2", c_out;
  int c_grid = 50;
  bool c_analytic = false;
  auto* curve = app.add_subcommand(
      "curve", "Emit the guessing-probability tradeoff curve as CSV");
  curve->add_option("--ineq", c_ineq,
                    "Inequality: chsh, chained3, cglmp3, or a JSON file");
  curve->add_option("--level", c_level, "Relaxation level: 1, 1ab, 2");
  curve->add_option("--grid", c_grid, "Number of grid points")
      ->check(CLI::Range(2, 100000));
  curve->add_flag("--analytic", c_analytic, "Use the closed-form CHSH curve");
  curve->add_option("--out", c_out, "Output file (default stdout)");

  // keyrate
  std::string k_preset = "chsh", k_level = "2", k_out;
  double k_vmin = 0.85, k_vmax = 1.0;
  int k_steps = 31, k_grid = 50;
  bool k_analytic = false;
  auto* keyrate = app.add_subcommand(
      "keyrate", "Sweep key rate vs visibility for a device preset");
  keyrate->add_option("--preset", k_preset, "Device preset: chsh, chained3");
  keyrate->add_option("--level", k_level, "Relaxation level for the curve");
  keyrate->add_flag("--analytic", k_analytic, "Closed-form CHSH curve");
  keyrate->add_option("--vmin", k_vmin, "Sweep start visibility");
  keyrate->add_option("--vmax", k_vmax, "Sweep end visibility");
  keyrate->add_option("--steps", k_steps, "Sweep points")
      ->check(CLI::Range(2, 100000));
  keyrate->add_option("--curve-grid", k_grid, "Curve grid points")
      ->check(CLI::Range(2, 100000));
  keyrate->add_option("--out", k_out, "Output file (default stdout)");

  // simulate
  std::string s_preset = "chsh", s_level = "2", s_out;
  double s_v = 1.0;
  long long s_n = 1000000, s_nest = 0, s_slack = -1;
  std::uint64_t s_seed = 1;
  int s_grid = 50;
  auto* simulate =
      app.add_subcommand("simulate", "Monte Carlo protocol run (JSON report)");
  simulate->add_option("--preset", s_preset, "Device preset: chsh, chained3");
  simulate->add_option("--v", s_v, "Visibility in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--N", s_n, "Raw-key rounds")->check(CLI::PositiveNumber);
  simulate->add_option("--Nest", s_nest,
                       "Estimation rounds (default round(sqrt(N)))");
  simulate->add_option("--slack", s_slack,
                       "Finite-size slack bits (default ceil(2*sqrt(N)))");
  simulate->add_option("--seed", s_seed, "RNG seed");
  simulate->add_option("--level", s_level, "Relaxation level for the curve");
  simulate->add_option("--curve-grid", s_grid, "Curve grid points");
  simulate->add_option("--out", s_out, "Output file (default stdout)");

  // verify-sos
  int vs_grid = 50;
  double vs_g0 = std::nan("");
  auto* verify = app.add_subcommand(
      "verify-sos", "Verify the CHSH sum-of-squares operator identity");
  verify->add_option("--grid", vs_grid, "Anchor points in [2, 2*sqrt(2))")
      ->check(CLI::Range(1, 100000));
  verify->add_option("--g0", vs_g0, "Verify a single anchor point instead");

  // local-bound
  std::string lb_spec;
  auto* local = app.add_subcommand(
      "local-bound", "Exact local bound by deterministic-strategy enumeration");
  local->add_option("spec", lb_spec, "Inequality name or JSON file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help/usage text
    return code == 0 ? 0 : 2;
  }

  try {
    if (curve->parsed()) {
      return cmd_curve(c_ineq, c_level, c_grid, c_analytic, c_out);
    }
    if (keyrate->parsed()) {
      return cmd_keyrate(k_preset, k_level, k_analytic, k_vmin, k_vmax,
                         k_steps, k_grid, k_out);
    }
    if (simulate->parsed()) {
      return cmd_simulate(s_preset, s_v, s_n, s_nest, s_slack, s_seed, s_level,
                          s_grid, s_out);
    }
    if (verify->parsed()) return cmd_verify_sos(vs_grid, vs_g0);
    if (local->parsed()) return cmd_local_bound(lb_spec);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const diqkd::InfeasiblePoint& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

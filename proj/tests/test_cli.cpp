// End-to-end tests for the command-line tool: exit codes, output schema,
// and byte-level determinism of reruns.
//
// Usage: test_cli <path-to-cli-binary> <path-to-presets-dir>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

int g_failures = 0;
std::string g_cli;
std::string g_presets;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

RunResult run_cli(const std::string& args) {
  std::string out_file = "cli_test_stdout.tmp";
  std::string cmd = g_cli + " " + args + " > " + out_file + " 2> /dev/null";
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  r.output = os.str();
  std::remove(out_file.c_str());
  return r;
}

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++g_failures;
    std::cout << "FAIL: " << what << "\n";
  }
}

void check_exit(const std::string& args, int expected) {
  auto r = run_cli(args);
  if (r.exit_code != expected) {
    ++g_failures;
    std::cout << "FAIL: `" << args << "` exited " << r.exit_code
              << ", expected " << expected << "\n";
  }
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: test_cli <cli-binary> <presets-dir>\n";
    return 1;
  }
  g_cli = argv[1];
  g_presets = argv[2];

  // --- exit codes -----------------------------------------------------
  check_exit("--version", 0);
  check_exit("", 2);                                // missing subcommand
  check_exit("no-such-subcommand", 2);              // unknown subcommand
  check_exit("local-bound chsh", 0);
  check_exit("local-bound not-an-inequality", 2);   // bad spec
  check_exit("curve --analytic --ineq chained3", 2);
  check_exit("curve --ineq chsh --level 9 --grid 3", 2);
  check_exit("keyrate --analytic --vmin 0.9 --vmax 0.8", 2);
  check_exit("simulate --preset nope --N 100", 2);
  check_exit("simulate --preset chsh --v 2 --N 100", 2);
  check_exit("verify-sos --grid 0", 2);

  // --- local-bound values ---------------------------------------------
  {
    auto r = run_cli("local-bound chsh");
    check(r.output == "2\n", "local-bound chsh prints 2");
    r = run_cli("local-bound chained3");
    check(r.output == "4\n", "local-bound chained3 prints 4");
    r = run_cli("local-bound " + g_presets + "/chsh.json");
    check(r.exit_code == 0 && r.output == "2\n",
          "local-bound on the JSON preset prints 2");
  }

  // --- curve: schema, manifest, determinism ----------------------------
  {
    auto a = run_cli("curve --analytic --ineq chsh --grid 5");
    check(a.exit_code == 0, "analytic curve exits 0");
    check(a.output.rfind("g,f,mu,nu\n", 0) == 0, "curve CSV header");
    check(contains(a.output, "# manifest: {"), "curve manifest comment");
    check(contains(a.output, "\"digest\":\"fnv1a64:"), "curve digest field");
    auto b = run_cli("curve --analytic --ineq chsh --grid 5");
    check(a.output == b.output, "analytic curve reruns byte-identical");

    auto s = run_cli("curve --ineq chsh --level 1 --grid 3");
    check(s.exit_code == 0, "level-1 SDP curve exits 0");
    check(s.output.rfind("g,f,mu,nu\n", 0) == 0, "SDP curve CSV header");
    auto s2 = run_cli("curve --ineq chsh --level 1 --grid 3");
    check(s.output == s2.output, "SDP curve reruns byte-identical");
  }

  // --- curve --out: file plus side-car manifest -------------------------
  {
    auto r = run_cli("curve --analytic --ineq chsh --grid 4 --out curve_t.csv");
    check(r.exit_code == 0, "curve --out exits 0");
    std::string csv = slurp("curve_t.csv");
    check(csv.rfind("g,f,mu,nu\n", 0) == 0, "written CSV has header");
    check(!contains(csv, "# manifest"), "written CSV has no inline manifest");
    std::string man = slurp("curve_t.csv.manifest.json");
    check(contains(man, "\"command\": \"curve\""), "side-car manifest content");
    std::remove("curve_t.csv");
    std::remove("curve_t.csv.manifest.json");
  }

  // --- keyrate: schema and the critical comment line --------------------
  {
    auto r = run_cli(
        "keyrate --preset chsh --analytic --vmin 0.88 --vmax 1 --steps 5");
    check(r.exit_code == 0, "analytic keyrate exits 0");
    check(r.output.rfind("v,qber,g,rate\n", 0) == 0, "keyrate CSV header");
    check(contains(r.output, "# critical v="), "keyrate critical comment");
    auto r2 = run_cli(
        "keyrate --preset chsh --analytic --vmin 0.95 --vmax 1 --steps 3");
    check(contains(r2.output, "# no rate sign change"),
          "keyrate reports when no crossing is bracketed");
  }

  // --- simulate: JSON report, determinism, seed sensitivity -------------
  {
    std::string base =
        "simulate --preset chsh --v 1 --N 2000 --level 1 --curve-grid 5";
    auto a = run_cli(base + " --seed 1");
    check(a.exit_code == 0, "simulate exits 0");
    for (const char* key : {"\"g_est\"", "\"std_error\"", "\"qber_emp\"",
                            "\"h_min_bound\"", "\"n_pub\"", "\"key_len\"",
                            "\"key_hex\"", "\"manifest\""}) {
      check(contains(a.output, key), std::string("simulate JSON has ") + key);
    }
    auto b = run_cli(base + " --seed 1");
    check(a.output == b.output, "simulate same seed byte-identical");
    auto c = run_cli(base + " --seed 2");
    check(a.output != c.output, "simulate different seed differs");
  }

  // --- verify-sos --------------------------------------------------------
  {
    auto r = run_cli("verify-sos --grid 10");
    check(r.exit_code == 0, "verify-sos grid exits 0");
    check(contains(r.output, "max residual over 10 anchor points"),
          "verify-sos grid output");
    auto p = run_cli("verify-sos --g0 2.5");
    check(p.exit_code == 0, "verify-sos single point exits 0");
    check(contains(p.output, "max residual at g0=2.5"),
          "verify-sos single point output");
    check_exit("verify-sos --g0 2.9", 2);  // outside [2, 2*sqrt(2))
  }

  if (g_failures == 0) {
    std::cout << "test_cli: all checks passed\n";
  } else {
    std::cout << "test_cli: " << g_failures << " check(s) failed\n";
  }
  return g_failures == 0 ? 0 : 1;
}

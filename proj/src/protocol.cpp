#include "diqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#if defined(__PCLMUL__)
#include <immintrin.h>
#endif

namespace diqkd {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed + kGamma * (stream + 1))) {}

std::uint64_t CounterRng::next_u64() {
  return mix64(key_ + kGamma * ++counter_);
}

double CounterRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int CounterRng::next_below(int n) {
  return static_cast<int>(next_double() * n);
}

BitVector BitVector::zeros(std::size_t n) {
  BitVector v;
  v.n_bits = n;
  v.words.assign((n + 63) / 64, 0);
  return v;
}

bool BitVector::get(std::size_t i) const {
  return (words[i / 64] >> (i % 64)) & 1u;
}

void BitVector::set(std::size_t i, bool v) {
  std::uint64_t mask = 1ULL << (i % 64);
  if (v) {
    words[i / 64] |= mask;
  } else {
    words[i / 64] &= ~mask;
  }
}

std::string BitVector::hex_prefix(std::size_t max_bits) const {
  std::size_t nb = std::min(max_bits, n_bits);
  std::string out;
  for (std::size_t i = 0; i < nb; i += 4) {
    int nib = 0;
    for (std::size_t k = 0; k < 4 && i + k < nb; ++k) {
      nib |= get(i + k) << k;
    }
    char buf[2];
    std::snprintf(buf, sizeof buf, "%x", nib);
    out += buf[0];
  }
  return out;
}

namespace {

struct U128 {
  std::uint64_t lo = 0, hi = 0;
};

/// Carryless 64x64 -> 128 multiply.
U128 clmul(std::uint64_t a, std::uint64_t b) {
#if defined(__PCLMUL__)
  __m128i va = _mm_set_epi64x(0, static_cast<long long>(a));
  __m128i vb = _mm_set_epi64x(0, static_cast<long long>(b));
  __m128i p = _mm_clmulepi64_si128(va, vb, 0x00);
  U128 r;
  r.lo = static_cast<std::uint64_t>(_mm_extract_epi64(p, 0));
  r.hi = static_cast<std::uint64_t>(_mm_extract_epi64(p, 1));
  return r;
#else
  U128 r;
  for (int k = 0; k < 64; ++k) {
    if ((a >> k) & 1u) {
      r.lo ^= b << k;
      if (k) r.hi ^= b >> (64 - k);
    }
  }
  return r;
#endif
}

}  // namespace

BitVector toeplitz_hash(const BitVector& x, const BitVector& seed,
                        std::size_t out_bits) {
  const std::size_t n = x.n_bits;
  if (out_bits == 0) return BitVector::zeros(0);
  if (n == 0) throw std::invalid_argument("toeplitz_hash: empty input");
  if (out_bits > n) {
    throw std::invalid_argument("toeplitz_hash: out_bits exceeds input length");
  }
  if (seed.n_bits < out_bits + n - 1) {
    throw std::invalid_argument("toeplitz_hash: seed too short");
  }

  // The output is bits [n-1, n-1+out_bits) of the carryless product
  // y = seed (*) x. Compute only the product words covering that window.
  const std::size_t first_bit = n - 1;
  const std::size_t last_bit = n - 2 + out_bits;
  const long long w_lo = static_cast<long long>(first_bit / 64);
  const long long w_hi = static_cast<long long>(last_bit / 64);
  const long long nxw = static_cast<long long>(x.words.size());
  const long long nsw = static_cast<long long>(seed.words.size());

  std::vector<std::uint64_t> window(static_cast<std::size_t>(w_hi - w_lo + 1),
                                    0);
#pragma omp parallel for schedule(static)
  for (long long w = w_lo; w <= w_hi; ++w) {
    std::uint64_t acc = 0;
    for (long long j = 0; j < nxw; ++j) {
      std::uint64_t xw = x.words[static_cast<std::size_t>(j)];
      if (xw == 0) continue;
      long long i = w - j;
      if (i >= 0 && i < nsw) {
        acc ^= clmul(seed.words[static_cast<std::size_t>(i)], xw).lo;
      }
      long long i2 = w - 1 - j;
      if (i2 >= 0 && i2 < nsw) {
        acc ^= clmul(seed.words[static_cast<std::size_t>(i2)], xw).hi;
      }
    }
    window[static_cast<std::size_t>(w - w_lo)] = acc;
  }

  BitVector out = BitVector::zeros(out_bits);
  const int shift = static_cast<int>(first_bit % 64);
  for (std::size_t k = 0; k < out.words.size(); ++k) {
    std::uint64_t lo = window[k] >> shift;
    std::uint64_t hi =
        (shift && k + 1 < window.size()) ? window[k + 1] << (64 - shift) : 0;
    out.words[k] = lo | hi;
  }
  if (out_bits % 64) {
    out.words.back() &= (1ULL << (out_bits % 64)) - 1;
  }
  return out;
}

BitVector toeplitz_hash_serial(const BitVector& x, const BitVector& seed,
                               std::size_t out_bits) {
  const std::size_t n = x.n_bits;
  if (out_bits == 0) return BitVector::zeros(0);
  if (n == 0) throw std::invalid_argument("toeplitz_hash_serial: empty input");
  if (out_bits > n) {
    throw std::invalid_argument(
        "toeplitz_hash_serial: out_bits exceeds input length");
  }
  if (seed.n_bits < out_bits + n - 1) {
    throw std::invalid_argument("toeplitz_hash_serial: seed too short");
  }
  BitVector out = BitVector::zeros(out_bits);
  for (std::size_t k = 0; k < out_bits; ++k) {
    bool bit = false;
    for (std::size_t j = 0; j < n; ++j) {
      bit ^= seed.get(n - 1 + k - j) && x.get(j);
    }
    out.set(k, bit);
  }
  return out;
}

BellEstimate estimate_bell(const BellInequality& ineq,
                           const CorrelationTable& table) {
  BellEstimate est;
  est.value = bell_value(ineq, table);
  const Scenario& s = ineq.scenario;
  double var = 0.0;
  for (int x = 0; x < s.inputs_a; ++x) {
    for (int y = 0; y < s.inputs_b; ++y) {
      double n_xy = table.kind() == TableKind::EmpiricalFrequency
                        ? static_cast<double>(table.pair_total(x, y))
                        : 0.0;
      if (n_xy <= 0.0) continue;
      double mean = 0.0, second = 0.0;
      for (int a = 0; a < s.outputs_a; ++a) {
        for (int b = 0; b < s.outputs_b; ++b) {
          double c = ineq.coeff(a, b, x, y);
          double f = table.value(a, b, x, y);
          mean += c * f;
          second += c * c * f;
        }
      }
      var += (second - mean * mean) / n_xy;
    }
  }
  est.std_error = std::sqrt(std::max(0.0, var));
  return est;
}

namespace {

/// Sample an (a, b) pair from the table's conditional block at (x, y).
std::pair<int, int> sample_pair(const CorrelationTable& table, int x, int y,
                                CounterRng& rng) {
  const Scenario& s = table.scenario();
  double u = rng.next_double();
  double cum = 0.0;
  for (int a = 0; a < s.outputs_a; ++a) {
    for (int b = 0; b < s.outputs_b; ++b) {
      cum += table.value(a, b, x, y);
      if (u < cum) return {a, b};
    }
  }
  return {s.outputs_a - 1, s.outputs_b - 1};  // guard against rounding
}

}  // namespace

ProtocolRun run(const ProtocolConfig& cfg) {
  // the device table may expose extra (raw-key) inputs beyond the
  // inequality's scenario; estimation only ever samples the latter
  const Scenario& s = cfg.ineq.scenario;
  const Scenario& dev = cfg.table.scenario();
  if (dev.inputs_a < s.inputs_a || dev.inputs_b < s.inputs_b ||
      dev.outputs_a != s.outputs_a || dev.outputs_b != s.outputs_b) {
    throw std::invalid_argument("run: table does not cover the inequality");
  }
  if (s.outputs_a != 2 || s.outputs_b != 2) {
    throw std::invalid_argument("run: key generation needs binary outputs");
  }
  if (cfg.n_raw <= 0) throw std::invalid_argument("run: n_raw must be > 0");
  if (cfg.x_raw < 0 || cfg.x_raw >= dev.inputs_a || cfg.y_raw < 0 ||
      cfg.y_raw >= dev.inputs_b) {
    throw std::invalid_argument("run: raw inputs out of range");
  }
  if (cfg.curve == nullptr) {
    throw std::invalid_argument("run: tradeoff curve required");
  }
  const long long n_raw = cfg.n_raw;
  const long long n_est =
      cfg.n_est > 0
          ? cfg.n_est
          : std::llround(std::sqrt(static_cast<double>(n_raw)));
  const long long slack =
      cfg.slack_bits >= 0
          ? cfg.slack_bits
          : static_cast<long long>(
                std::ceil(2.0 * std::sqrt(static_cast<double>(n_raw))));

  CounterRng raw_rng(cfg.seed, 0);
  CounterRng input_rng(cfg.seed, 1);
  CounterRng est_rng(cfg.seed, 2);
  CounterRng hash_rng(cfg.seed, 3);

  // generation rounds
  ProtocolRun out;
  out.alice_raw = BitVector::zeros(static_cast<std::size_t>(n_raw));
  out.bob_raw = BitVector::zeros(static_cast<std::size_t>(n_raw));
  long long joint[2][2] = {{0, 0}, {0, 0}};
  for (long long i = 0; i < n_raw; ++i) {
    auto [a, b] = sample_pair(cfg.table, cfg.x_raw, cfg.y_raw, raw_rng);
    out.alice_raw.set(static_cast<std::size_t>(i), a == 1);
    out.bob_raw.set(static_cast<std::size_t>(i), b == 1);
    ++joint[a][b];
  }

  // estimation rounds with uniform input pairs
  std::vector<std::int64_t> counts(static_cast<std::size_t>(s.table_size()),
                                   0);
  for (long long i = 0; i < n_est; ++i) {
    int x = input_rng.next_below(s.inputs_a);
    int y = input_rng.next_below(s.inputs_b);
    auto [a, b] = sample_pair(cfg.table, x, y, est_rng);
    ++counts[static_cast<std::size_t>(s.index(a, b, x, y))];
  }

  out.est_table = CorrelationTable::empirical(s, counts);
  for (int x = 0; x < s.inputs_a && !out.sparse_estimation; ++x) {
    for (int y = 0; y < s.inputs_b; ++y) {
      if (out.est_table.pair_total(x, y) == 0) {
        out.sparse_estimation = true;
        break;
      }
    }
  }
  BellEstimate est = estimate_bell(cfg.ineq, out.est_table);
  out.g_est = est.value;
  out.std_error = est.std_error;

  // empirical H(a|b) and QBER on the generation rounds
  double qber = static_cast<double>(joint[0][1] + joint[1][0]) /
                static_cast<double>(n_raw);
  double h_ab = 0.0;
  for (int b = 0; b < 2; ++b) {
    double nb = static_cast<double>(joint[0][b] + joint[1][b]);
    if (nb == 0.0) continue;
    double pb = nb / static_cast<double>(n_raw);
    h_ab += pb * binary_entropy(static_cast<double>(joint[0][b]) / nb);
  }
  out.qber_emp = qber;
  out.cond_entropy_emp = h_ab;

  out.report = min_entropy_bound(*cfg.curve, out.g_est, n_raw, n_est);
  out.h_min_bound = out.report.h_min;
  out.n_pub = static_cast<long long>(
      std::ceil(static_cast<double>(n_raw) * h_ab));
  out.slack_bits = slack;
  out.key_len = std::max<long long>(
      0, static_cast<long long>(std::floor(out.h_min_bound)) - out.n_pub -
             slack);

  if (out.key_len > 0) {
    std::size_t seed_bits =
        static_cast<std::size_t>(out.key_len) + out.alice_raw.n_bits - 1;
    BitVector hash_seed = BitVector::zeros(seed_bits);
    for (std::size_t w = 0; w < hash_seed.words.size(); ++w) {
      hash_seed.words[w] = hash_rng.next_u64();
    }
    if (seed_bits % 64) {
      hash_seed.words.back() &= (1ULL << (seed_bits % 64)) - 1;
    }
    out.key = toeplitz_hash(out.alice_raw, hash_seed,
                            static_cast<std::size_t>(out.key_len));
  }
  return out;
}

}  // namespace diqkd

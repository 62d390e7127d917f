#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"
#include "diqkd/quantum.hpp"
#include "diqkd/rate.hpp"

namespace diqkd {

/// Counter-based splitmix64 generator. Streams derived from the same seed
/// with different stream ids are independent; output depends only on
/// (seed, stream, counter), never on call order across streams.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_double();
  /// Uniform integer in [0, n).
  int next_below(int n);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Packed little-endian bit vector: bit i lives in word i/64, position i%64.
struct BitVector {
  std::vector<std::uint64_t> words;
  std::size_t n_bits = 0;

  static BitVector zeros(std::size_t n);
  bool get(std::size_t i) const;
  void set(std::size_t i, bool v);
  std::string hex_prefix(std::size_t max_bits) const;
};

/// Toeplitz extractor: out_k = XOR_j s[n-1+k-j] x[j] for an (m x n) Toeplitz
/// matrix built from m+n-1 seed bits. Computed as a windowed carryless
/// convolution (PCLMUL when available), parallel over output words.
BitVector toeplitz_hash(const BitVector& x, const BitVector& seed,
                        std::size_t out_bits);

/// Bit-at-a-time reference implementation of the same map.
BitVector toeplitz_hash_serial(const BitVector& x, const BitVector& seed,
                               std::size_t out_bits);

struct BellEstimate {
  double value = 0.0;
  double std_error = 0.0;  // plug-in multinomial standard error
};

/// Bell value and its standard error from an empirical table.
BellEstimate estimate_bell(const BellInequality& ineq,
                           const CorrelationTable& table);

struct ProtocolConfig {
  long long n_raw = 0;
  long long n_est = 0;          // 0: defaults to round(sqrt(n_raw))
  int x_raw = 0;
  int y_raw = 0;
  BellInequality ineq;
  CorrelationTable table;       // device behavior q(ab|xy)
  const TradeoffCurve* curve = nullptr;
  std::uint64_t seed = 1;
  long long slack_bits = -1;    // <0: defaults to ceil(2*sqrt(n_raw))
};

struct ProtocolRun {
  BitVector alice_raw;            // raw key a; the reconciliation oracle sets
  BitVector bob_raw;              // Bob's corrected string b' equal to it
  double g_est = 0.0;
  double std_error = 0.0;
  double qber_emp = 0.0;
  double cond_entropy_emp = 0.0;  // H(a|b) on the raw rounds
  MinEntropyReport report;
  double h_min_bound = 0.0;
  long long n_pub = 0;            // bits leaked by reconciliation
  long long slack_bits = 0;
  long long key_len = 0;
  BitVector key;
  bool sparse_estimation = false; // some (x,y) pair drew zero samples
  CorrelationTable est_table;     // empirical estimation-round counts
};

/// One full protocol run: n_raw generation rounds at (x_raw, y_raw), n_est
/// estimation rounds with uniform inputs, reconciliation leakage
/// ceil(n_raw * H(a|b)), and Toeplitz privacy amplification of Alice's bits.
/// Deterministic for a fixed seed. Requires binary outputs on both sides.
ProtocolRun run(const ProtocolConfig& cfg);

}  // namespace diqkd

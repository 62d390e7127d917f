#include "diqkd/quantum.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diqkd {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

DensityMatrix::DensityMatrix(MatrixXcd mat) : m(std::move(mat)) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw std::invalid_argument("DensityMatrix: must be square");
  }
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  }
  if (std::abs(m.trace().real() - 1.0) > 1e-12 ||
      std::abs(m.trace().imag()) > 1e-12) {
    throw std::invalid_argument("DensityMatrix: trace != 1");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::with_visibility(double v) const {
  NoiseModel check(v);  // validates range
  MatrixXcd id = MatrixXcd::Identity(dim(), dim());
  return DensityMatrix(v * m + (1.0 - v) / dim() * id);
}

MeasurementSet::MeasurementSet(int d,
                               std::vector<std::vector<MatrixXcd>> operators)
    : dim(d), ops(std::move(operators)) {
  if (dim < 1 || ops.empty()) {
    throw std::invalid_argument("MeasurementSet: empty");
  }
  for (const auto& input : ops) {
    if (input.empty()) throw std::invalid_argument("MeasurementSet: no outcomes");
    MatrixXcd sum = MatrixXcd::Zero(dim, dim);
    for (const auto& op : input) {
      if (op.rows() != dim || op.cols() != dim) {
        throw std::invalid_argument("MeasurementSet: dimension mismatch");
      }
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(op, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10) {
        throw std::invalid_argument("MeasurementSet: operator not PSD");
      }
      sum += op;
    }
    if ((sum - MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-10) {
      throw std::invalid_argument("MeasurementSet: outcomes do not sum to 1");
    }
  }
}

NoiseModel::NoiseModel(double v) : visibility(v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument("NoiseModel: visibility outside [0,1]");
  }
}

CorrelationTable correlations(const DensityMatrix& rho,
                              const MeasurementSet& alice,
                              const MeasurementSet& bob) {
  if (rho.dim() != alice.dim * bob.dim) {
    throw std::invalid_argument("correlations: dim(rho) != dim_A * dim_B");
  }
  Scenario s{alice.inputs(), bob.inputs(), alice.outputs(), bob.outputs()};
  std::vector<double> q(s.table_size(), 0.0);
  for (int x = 0; x < s.inputs_a; ++x) {
    for (int y = 0; y < s.inputs_b; ++y) {
      double block = 0.0;
      for (int a = 0; a < s.outputs_a; ++a) {
        for (int b = 0; b < s.outputs_b; ++b) {
          MatrixXcd ab = Eigen::kroneckerProduct(alice.op(a, x), bob.op(b, y));
          double p = (rho.m * ab).trace().real();
          if (p < 0.0) {
            if (p < -1e-12) {
              throw std::runtime_error("correlations: probability < -1e-12");
            }
            p = 0.0;
          }
          q[s.index(a, b, x, y)] = p;
          block += p;
        }
      }
      for (int a = 0; a < s.outputs_a; ++a)
        for (int b = 0; b < s.outputs_b; ++b) q[s.index(a, b, x, y)] /= block;
    }
  }
  return CorrelationTable::exact(s, std::move(q));
}

ErrorStatistics raw_key_statistics(const CorrelationTable& table, int x_raw,
                                   int y_raw) {
  const Scenario& s = table.scenario();
  if (x_raw < 0 || x_raw >= s.inputs_a || y_raw < 0 || y_raw >= s.inputs_b) {
    throw std::invalid_argument("raw_key_statistics: input out of range");
  }
  ErrorStatistics es;
  es.outputs_a = s.outputs_a;
  es.outputs_b = s.outputs_b;
  es.joint.assign(s.outputs_a * s.outputs_b, 0.0);
  std::vector<double> pb(s.outputs_b, 0.0);
  for (int a = 0; a < s.outputs_a; ++a)
    for (int b = 0; b < s.outputs_b; ++b) {
      double p = table.value(a, b, x_raw, y_raw);
      es.joint[a * s.outputs_b + b] = p;
      pb[b] += p;
      if (a != b) es.qber += p;
    }
  double h = 0.0;
  for (int a = 0; a < s.outputs_a; ++a)
    for (int b = 0; b < s.outputs_b; ++b) {
      double pab = es.joint[a * s.outputs_b + b];
      if (pab > 0.0 && pb[b] > 0.0) h -= pab * std::log2(pab / pb[b]);
    }
  es.cond_entropy = std::max(h, 0.0);
  return es;
}

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("binary_entropy: p outside [0,1]");
  }
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

std::vector<MatrixXcd> qubit_projectors(double angle) {
  MatrixXcd sz(2, 2), sx(2, 2);
  sz << 1, 0, 0, -1;
  sx << 0, 1, 1, 0;
  MatrixXcd obs = std::cos(angle) * sz + std::sin(angle) * sx;
  MatrixXcd id = MatrixXcd::Identity(2, 2);
  return {(id + obs) / 2.0, (id - obs) / 2.0};
}

TightnessModel tightness_family(double g) {
  const double gmax = 2.0 * std::numbers::sqrt2;
  if (g < 2.0 - 1e-12 || g > gmax + 1e-12) {
    throw std::invalid_argument("tightness_family: g outside [2, 2*sqrt(2)]");
  }
  g = std::clamp(g, 2.0, gmax);
  double s2t = std::sqrt(std::max(0.0, g * g / 4.0 - 1.0));
  double theta = 0.5 * std::asin(std::min(1.0, s2t));
  double phi = std::atan(s2t);

  VectorXcd psi = VectorXcd::Zero(4);
  psi(0) = std::cos(theta);
  psi(3) = std::sin(theta);
  DensityMatrix rho(psi * psi.adjoint());

  MeasurementSet alice(2, {qubit_projectors(0.0),            // A0 = sigma_z
                           qubit_projectors(std::numbers::pi / 2)});  // A1 = sigma_x
  MeasurementSet bob(2, {qubit_projectors(phi),              // B0
                         qubit_projectors(-phi)});           // B1
  return TightnessModel{std::move(rho), std::move(alice), std::move(bob),
                        StateSpec{theta, phi}};
}

namespace {

DensityMatrix max_entangled(int d) {
  VectorXcd psi = VectorXcd::Zero(d * d);
  for (int j = 0; j < d; ++j) psi(j * d + j) = 1.0 / std::sqrt(double(d));
  return DensityMatrix(psi * psi.adjoint());
}

// Qutrit projectors of the standard CGLMP-optimal bases: for Alice,
// |k> ~ sum_j exp(i 2pi/3 j(k+alpha)) |j>; Bob uses -l in the exponent.
std::vector<MatrixXcd> qutrit_fourier_projectors(double phase, bool conj_label) {
  std::vector<MatrixXcd> out;
  const double w = 2.0 * std::numbers::pi / 3.0;
  for (int k = 0; k < 3; ++k) {
    VectorXcd v(3);
    for (int j = 0; j < 3; ++j) {
      double arg = w * j * ((conj_label ? -k : k) + phase);
      v(j) = std::polar(1.0 / std::sqrt(3.0), arg);
    }
    out.push_back(v * v.adjoint());
  }
  return out;
}

}  // namespace

DevicePreset make_preset(const std::string& name, double visibility) {
  const double pi = std::numbers::pi;
  if (name == "chsh-optimal") {
    // Alice x=1 and Bob y=2 are the computational (raw key) direction.
    MeasurementSet alice(2, {qubit_projectors(pi / 2), qubit_projectors(0.0)});
    MeasurementSet bob(2, {qubit_projectors(pi / 4), qubit_projectors(3 * pi / 4),
                           qubit_projectors(0.0)});
    DevicePreset p{max_entangled(2).with_visibility(visibility),
                   std::move(alice), std::move(bob), 1, 2, build_chsh()};
    return p;
  }
  if (name == "chained3-optimal") {
    const int n = 3;
    const double c = pi / (2 * n);
    std::vector<std::vector<MatrixXcd>> aops, bops;
    for (int x = 0; x < n; ++x)
      aops.push_back(qubit_projectors(2.0 * (x - (n - 1)) * c));
    for (int y = 0; y < n; ++y)
      bops.push_back(qubit_projectors((2.0 * (y - (n - 1)) + 1.0) * c));
    bops.push_back(qubit_projectors(0.0));  // y_raw = n, computational
    DevicePreset p{max_entangled(2).with_visibility(visibility),
                   MeasurementSet(2, std::move(aops)),
                   MeasurementSet(2, std::move(bops)),
                   n - 1, n, build_chained(n)};
    return p;
  }
  if (name == "cglmp3-optimal") {
    std::vector<std::vector<MatrixXcd>> aops = {
        qutrit_fourier_projectors(0.0, false),
        qutrit_fourier_projectors(0.5, false)};
    std::vector<std::vector<MatrixXcd>> bops = {
        qutrit_fourier_projectors(0.25, true),
        qutrit_fourier_projectors(-0.25, true)};
    DevicePreset p{max_entangled(3).with_visibility(visibility),
                   MeasurementSet(3, std::move(aops)),
                   MeasurementSet(3, std::move(bops)), 0, 0, build_cglmp3()};
    return p;
  }
  throw std::invalid_argument("make_preset: unknown preset '" + name + "'");
}

}  // namespace diqkd

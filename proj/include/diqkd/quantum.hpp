#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "diqkd/bell.hpp"

namespace diqkd {

/// Density matrix: Hermitian, unit trace, PSD within tolerance.
struct DensityMatrix {
  Eigen::MatrixXcd m;

  explicit DensityMatrix(Eigen::MatrixXcd mat);
  int dim() const { return static_cast<int>(m.rows()); }

  /// Isotropic visibility noise: v*rho + (1-v)*I/dim.
  DensityMatrix with_visibility(double v) const;
};

/// One party's measurements: for each input x, operators A(a|x) summing to 1.
struct MeasurementSet {
  int dim = 0;
  std::vector<std::vector<Eigen::MatrixXcd>> ops;  // [input][outcome]

  MeasurementSet() = default;
  MeasurementSet(int dim, std::vector<std::vector<Eigen::MatrixXcd>> operators);

  int inputs() const { return static_cast<int>(ops.size()); }
  int outputs() const { return ops.empty() ? 0 : static_cast<int>(ops[0].size()); }
  const Eigen::MatrixXcd& op(int a, int x) const { return ops[x][a]; }
};

struct NoiseModel {
  double visibility = 1.0;

  explicit NoiseModel(double v);
};

/// Partially entangled pair cos(theta)|00> + sin(theta)|11> with Bob tilt phi.
struct StateSpec {
  double theta = 0.0;
  double phi = 0.0;
};

/// Joint statistics of the raw-key inputs.
struct ErrorStatistics {
  std::vector<double> joint;  // P(a,b), row-major [a][b]
  int outputs_a = 0;
  int outputs_b = 0;
  double cond_entropy = 0.0;  // H(a|b) in bits
  double qber = 0.0;          // P(a != b)
};

/// q(ab|xy) = tr[rho (A(a|x) x B(b|y))], negatives below 1e-12 clipped and
/// each (x,y) block renormalized.
CorrelationTable correlations(const DensityMatrix& rho,
                              const MeasurementSet& alice,
                              const MeasurementSet& bob);

/// Joint P(a,b), conditional Shannon entropy H(a|b), and QBER at (x_raw, y_raw).
ErrorStatistics raw_key_statistics(const CorrelationTable& table, int x_raw,
                                   int y_raw);

/// h(p) = -p log2 p - (1-p) log2 (1-p), with h(0)=h(1)=0.
double binary_entropy(double p);

/// State and measurements saturating the CHSH guessing-probability bound at
/// Bell value g in [2, 2*sqrt(2)]: sin(2 theta) = sqrt(g^2/4 - 1),
/// tan(phi) = sin(2 theta).
struct TightnessModel {
  DensityMatrix rho;
  MeasurementSet alice;
  MeasurementSet bob;
  StateSpec spec;
};
TightnessModel tightness_family(double g);

/// Compiled-in reference device: state, measurements (Bob carries one extra
/// raw-key input), raw inputs, and the matching inequality.
struct DevicePreset {
  DensityMatrix rho;
  MeasurementSet alice;
  MeasurementSet bob;
  int x_raw = 0;
  int y_raw = 0;
  BellInequality ineq;
};

/// Names: "chsh-optimal", "chained3-optimal", "cglmp3-optimal".
DevicePreset make_preset(const std::string& name, double visibility = 1.0);

/// Qubit projective pair {P(+), P(-)} of cos(t) sigma_z + sin(t) sigma_x.
std::vector<Eigen::MatrixXcd> qubit_projectors(double angle);

}  // namespace diqkd

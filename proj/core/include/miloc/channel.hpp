#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "miloc/geometry.hpp"

namespace miloc {

using CMat3 = Eigen::Matrix3cd;

/// Solenoid subcoil constants. All three subcoils of a node share them.
struct CoilParams {
  double area = 0.0;        // m^2
  double turns = 0.0;
  double resistance = 1.0;  // ohm
  double diameter = 0.0;    // m

  static CoilParams from_diameter(double diameter, double turns, double resistance);
  bool valid() const { return area > 0.0 && turns > 0.0 && resistance > 0.0 && diameter > 0.0; }
};

struct GlobalParams {
  double frequency = 500e3;           // Hz
  double permeability = 4e-7 * std::numbers::pi;  // H/m
  double noise_sigma = 1e-5;
  bool valid() const { return frequency > 0.0 && permeability > 0.0 && noise_sigma > 0.0; }
};

/// c = mu * A_tx * A_rx * nu_tx * nu_rx * f / sqrt(4 R_tx R_rx)
double coupling_coefficient(const CoilParams& tx, const CoilParams& rx, const GlobalParams& g);

/// Coupling coefficients for a node population (agents first, then anchors).
class CouplingTable {
 public:
  CouplingTable() = default;
  /// Every node uses the same coil.
  CouplingTable(const CoilParams& coil, const GlobalParams& g) : uniform_(coupling_coefficient(coil, coil, g)) {}
  CouplingTable(std::vector<CoilParams> per_node, const GlobalParams& g);

  double operator()(std::size_t tx, std::size_t rx) const;
  bool uniform() const { return per_node_.empty(); }

 private:
  double uniform_ = 0.0;
  std::vector<CoilParams> per_node_;
  GlobalParams globals_{};
};

/// Dipole factor F(u) = 3/2 u u^T - 1/2 I.
Mat3 dipole_factor(const Vec3& u);

/// Distance, direction and dipole factor for r = p_rx - p_tx.
struct LinkGeometry {
  double r = 0.0;
  Vec3 u = Vec3::UnitX();
  Mat3 F = Mat3::Zero();

  /// Throws CoincidentNodes for r < 1e-9 m.
  static LinkGeometry between(const Vec3& tx, const Vec3& rx);
};

/// Imaginary part of the channel matrix: H = j * channel_gains(...).
Mat3 channel_gains(const Deployment& tx, const Deployment& rx, double c);

/// H = (j c / r^3) O_rx^T F(u) O_tx, u pointing from tx to rx.
CMat3 channel_matrix(const Deployment& tx, const Deployment& rx, double c);

/// Adds i.i.d. CN(0, sigma^2) entries (variance sigma^2 / 2 per real dimension).
CMat3 add_noise(const CMat3& H, double sigma, Rng& rng);

/// Derivatives of Im{H} with respect to the deployment vectors
/// [p_x, p_y, p_z, alpha, beta, gamma] of both link ends. The complex
/// derivative is j times each matrix.
struct LinkJacobian {
  std::array<Mat3, 6> d_tx;
  std::array<Mat3, 6> d_rx;
};

/// When `gains` is non-null it receives channel_gains(tx, rx, c).
LinkJacobian channel_jacobian(const Deployment& tx, const Deployment& rx, double c,
                              Mat3* gains = nullptr);

/// Complex derivatives of H with respect to the transmitting node's
/// deployment vector.
std::array<CMat3, 6> channel_jacobian_tx(const Deployment& tx, const Deployment& rx, double c);

enum class LinkKind { AgentAnchor, AgentAgent };

/// A measured channel matrix for the ordered pair (tx, rx); tx is always an
/// agent. Node ids: agents 0..M-1, anchors M..M+N-1.
struct LinkMeasurement {
  std::size_t tx = 0;
  std::size_t rx = 0;
  CMat3 h = CMat3::Zero();
  LinkKind kind = LinkKind::AgentAnchor;
};

}  // namespace miloc

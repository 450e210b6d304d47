#include "miloc/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "miloc/error.hpp"

namespace miloc {

CoilParams CoilParams::from_diameter(double diameter, double turns, double resistance) {
  const double radius = 0.5 * diameter;
  return CoilParams{std::numbers::pi * radius * radius, turns, resistance, diameter};
}

double coupling_coefficient(const CoilParams& tx, const CoilParams& rx, const GlobalParams& g) {
  return g.permeability * tx.area * rx.area * tx.turns * rx.turns * g.frequency /
         std::sqrt(4.0 * tx.resistance * rx.resistance);
}

CouplingTable::CouplingTable(std::vector<CoilParams> per_node, const GlobalParams& g)
    : per_node_(std::move(per_node)), globals_(g) {}

double CouplingTable::operator()(std::size_t tx, std::size_t rx) const {
  if (per_node_.empty()) return uniform_;
  if (tx >= per_node_.size() || rx >= per_node_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "node id outside coil table");
  }
  return coupling_coefficient(per_node_[tx], per_node_[rx], globals_);
}

Mat3 dipole_factor(const Vec3& u) {
  return 1.5 * u * u.transpose() - 0.5 * Mat3::Identity();
}

LinkGeometry LinkGeometry::between(const Vec3& tx, const Vec3& rx) {
  const Vec3 d = rx - tx;
  const double r = d.norm();
  if (!(r >= 1e-9)) throw Error(ErrorKind::CoincidentNodes, "nodes closer than 1e-9 m");
  LinkGeometry g;
  g.r = r;
  g.u = d / r;
  g.F = dipole_factor(g.u);
  return g;
}

Mat3 channel_gains(const Deployment& tx, const Deployment& rx, double c) {
  const auto g = LinkGeometry::between(tx.position(), rx.position());
  return (c / (g.r * g.r * g.r)) * rx.rotation().transpose() * g.F * tx.rotation();
}

CMat3 channel_matrix(const Deployment& tx, const Deployment& rx, double c) {
  CMat3 H;
  H.real().setZero();
  H.imag() = channel_gains(tx, rx, c);
  return H;
}

CMat3 add_noise(const CMat3& H, double sigma, Rng& rng) {
  if (sigma <= 0.0) return H;
  std::normal_distribution<double> normal(0.0, sigma / std::numbers::sqrt2);
  CMat3 out = H;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(i, j) += std::complex<double>(re, im);
    }
  }
  return out;
}

LinkJacobian channel_jacobian(const Deployment& tx, const Deployment& rx, double c, Mat3* gains) {
  const auto g = LinkGeometry::between(tx.position(), rx.position());
  const double scale = c / (g.r * g.r * g.r);
  const Mat3& Otx = tx.rotation();
  const Mat3 OrxT = rx.rotation().transpose();
  const Vec3& u = g.u;

  LinkJacobian J;
  // Spatial part, differentiating with respect to the receiving end p_rx
  // (r = p_rx - p_tx):
  //   du/dp_i = (I - u u^T) e_i / r,  dF/dp_i = 3/2 (du u^T + u du^T),
  //   d(r^-3)/dp_i = -3 u_i r^-4.
  // Translating both ends together leaves H unchanged, so d/dp_tx = -d/dp_rx.
  const Mat3 P = Mat3::Identity() - u * u.transpose();
  for (int i = 0; i < 3; ++i) {
    const Vec3 du = P.col(i) / g.r;
    const Mat3 dF = 1.5 * (du * u.transpose() + u * du.transpose());
    const Mat3 d = scale * OrxT * (dF - (3.0 * u[i] / g.r) * g.F) * Otx;
    J.d_rx[i] = d;
    J.d_tx[i] = -d;
  }

  const auto dOtx = euler_rotation_derivatives(tx.euler());
  const auto dOrx = euler_rotation_derivatives(rx.euler());
  const Mat3 left = scale * OrxT * g.F;
  const Mat3 right = scale * g.F * Otx;
  if (gains != nullptr) *gains = OrxT * right;
  for (int i = 0; i < 3; ++i) {
    J.d_tx[3 + i] = left * dOtx[i];
    J.d_rx[3 + i] = dOrx[i].transpose() * right;
  }
  return J;
}

std::array<CMat3, 6> channel_jacobian_tx(const Deployment& tx, const Deployment& rx, double c) {
  const auto J = channel_jacobian(tx, rx, c);
  std::array<CMat3, 6> out;
  for (int k = 0; k < 6; ++k) {
    out[k].real().setZero();
    out[k].imag() = J.d_tx[k];
  }
  return out;
}

}  // namespace miloc

#include "miloc/pair_ml.hpp"

#include <algorithm>
#include <cmath>

#include "miloc/error.hpp"

namespace miloc {

SvdTriple canonical_svd(const Mat3& A) {
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdTriple out{svd.matrixU(), svd.matrixV(), svd.singularValues()};
  for (int j = 0; j < 3; ++j) {
    Eigen::Index i = 0;
    out.V.col(j).cwiseAbs().maxCoeff(&i);
    if (out.V(i, j) < 0.0) {
      out.V.col(j) *= -1.0;
      out.U.col(j) *= -1.0;
    }
  }
  return out;
}

LinkDecomposition decompose_link(const CMat3& h_meas, const Deployment& anchor) {
  if (!h_meas.allFinite()) throw Error(ErrorKind::DegenerateMeasurement, "non-finite channel matrix");
  const Mat3 A = h_meas.imag().transpose() * anchor.rotation().transpose();

  LinkDecomposition out;
  out.svd = canonical_svd(A);
  const Vec3& s = out.svd.s;
  if (s[0] < 1e-15) throw Error(ErrorKind::DegenerateMeasurement, "imaginary part vanishes");

  const double d = (out.svd.U * out.svd.V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  out.orientation = out.svd.V * Vec3(1.0, -1.0, -d).asDiagonal() * out.svd.U.transpose();
  out.dipole = out.svd.V * Vec3(1.0, -0.5, -0.5).asDiagonal() * out.svd.V.transpose();
  out.z = s[0] + 0.5 * s[1] + 0.5 * d * s[2];
  out.near_degenerate = d < 0.0 && (s[1] - s[2]) < 1e-9 * s[0];
  return out;
}

double ml_distance(double z, double c) {
  if (!(z > 0.0)) throw Error(ErrorKind::ZeroScore, "trace score must be positive");
  return std::cbrt(1.5 * c / z);
}

Vec3 direction_estimate(const SvdTriple& svd) {
  if (svd.s[0] - svd.s[1] < 1e-12 * svd.s[0]) {
    throw Error(ErrorKind::AmbiguousDirection, "leading singular value is not simple");
  }
  return svd.V.col(0).normalized();
}

PositionResolution resolve_position(const Vec3& anchor_pos, const Vec3& u_hat, double r_hat,
                                    const Room& room) {
  PositionResolution out;
  out.candidates = {anchor_pos + u_hat * r_hat, anchor_pos - u_hat * r_hat};
  const bool in0 = room.contains(out.candidates[0]);
  const bool in1 = room.contains(out.candidates[1]);
  if (in0 && in1) {
    out.validity = Validity::BothInRoom;
  } else if (in0 || in1) {
    out.validity = Validity::UniqueInRoom;
    out.chosen = in0 ? out.candidates[0] : out.candidates[1];
  } else {
    out.validity = Validity::NoneInRoom;
  }
  return out;
}

PairMlResult estimate_link(const LinkMeasurement& link, const Deployment& anchor, double c,
                           const Room& room) {
  const auto dec = decompose_link(link.h, anchor);
  PairMlResult out;
  out.anchor = link.rx;
  out.orientation = dec.orientation;
  out.z = dec.z;
  out.distance = ml_distance(dec.z, c);
  out.direction = direction_estimate(dec.svd);
  const auto res = resolve_position(anchor.position(), out.direction, out.distance, room);
  out.candidates = res.candidates;
  out.chosen = res.chosen;
  out.validity = res.validity;
  return out;
}

PairMlEstimate pair_ml_estimate(std::span<const LinkMeasurement> agent_links,
                                std::span<const Deployment> anchors, std::size_t num_agents,
                                const CouplingTable& coupling, const Room& room) {
  PairMlEstimate out;
  for (const auto& link : agent_links) {
    if (link.kind != LinkKind::AgentAnchor || link.rx < num_agents) continue;
    const std::size_t k = link.rx - num_agents;
    if (k >= anchors.size()) throw Error(ErrorKind::DimensionMismatch, "anchor id out of range");
    try {
      out.links.push_back(estimate_link(link, anchors[k], coupling(link.tx, link.rx), room));
    } catch (const Error& e) {
      // Degenerate links carry no usable direction; skip them.
      if (e.kind() != ErrorKind::DegenerateMeasurement && e.kind() != ErrorKind::AmbiguousDirection &&
          e.kind() != ErrorKind::ZeroScore) {
        throw;
      }
    }
  }
  if (out.links.empty()) throw Error(ErrorKind::NoMeasurements, "no usable agent-anchor link");

  std::stable_sort(out.links.begin(), out.links.end(),
                   [](const PairMlResult& a, const PairMlResult& b) { return a.distance < b.distance; });

  const PairMlResult* used = nullptr;
  Vec3 position;
  for (const auto& l : out.links) {
    if (l.validity == Validity::UniqueInRoom) {
      used = &l;
      position = *l.chosen;
      out.pick = PairMlPick::Unique;
      break;
    }
  }
  if (used == nullptr) {
    used = &out.links.front();
    const auto& cand = used->candidates;
    if (used->validity == Validity::BothInRoom) {
      const Vec3 center = room.center();
      position = (cand[0] - center).norm() <= (cand[1] - center).norm() ? cand[0] : cand[1];
      out.pick = PairMlPick::FallbackBoth;
    } else {
      position = room.distance_to(cand[0]) <= room.distance_to(cand[1]) ? cand[0] : cand[1];
      position = room.clamp(position);
      out.pick = PairMlPick::FallbackNone;
    }
  }
  out.anchor = used->anchor;
  out.deployment = Deployment::from_rotation(position, used->orientation);
  return out;
}

}  // namespace miloc

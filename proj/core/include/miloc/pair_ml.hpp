#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "miloc/channel.hpp"
#include "miloc/geometry.hpp"

namespace miloc {

/// A = U diag(s) V^T with s descending. Column signs of V are fixed so that
/// the largest-magnitude entry of each column is positive (U compensates).
struct SvdTriple {
  Mat3 U = Mat3::Identity();
  Mat3 V = Mat3::Identity();
  Vec3 s = Vec3::Zero();
};

SvdTriple canonical_svd(const Mat3& A);

/// Closed-form orientation and trace score of a single agent-anchor link.
struct LinkDecomposition {
  SvdTriple svd;
  Mat3 orientation = Mat3::Identity();  // ML estimate of the agent orientation
  Mat3 dipole = Mat3::Zero();           // V diag(1, -1/2, -1/2) V^T
  double z = 0.0;                       // maximized trace score
  bool near_degenerate = false;         // s2 - s3 < 1e-9 s1 with det(U V^T) = -1
};

/// Builds A = Im{H}^T O_anchor^T and solves the constrained Procrustes
/// problem max trace(A F(u) O) over unit u and proper rotations O:
///   O_hat = V diag(1, -1, -d) U^T,  z = s1 + s2/2 + d s3/2,  d = det(U V^T).
/// Throws DegenerateMeasurement when s1 < 1e-15.
LinkDecomposition decompose_link(const CMat3& h_meas, const Deployment& anchor);

/// r = (3/2 c / z)^(1/3). Throws ZeroScore for z <= 0.
double ml_distance(double z, double c);

/// Principal right singular vector (sign ambiguous).
/// Throws AmbiguousDirection when s1 - s2 < 1e-12 s1.
Vec3 direction_estimate(const SvdTriple& svd);

enum class Validity { UniqueInRoom, BothInRoom, NoneInRoom };

struct PositionResolution {
  std::array<Vec3, 2> candidates;
  std::optional<Vec3> chosen;
  Validity validity = Validity::NoneInRoom;
};

/// Candidates p_anchor +/- u r; chosen iff exactly one lies in the room.
PositionResolution resolve_position(const Vec3& anchor_pos, const Vec3& u_hat, double r_hat,
                                    const Room& room);

/// Everything derived from one agent-anchor link.
struct PairMlResult {
  std::size_t anchor = 0;  // node id of the anchor
  Mat3 orientation = Mat3::Identity();
  Vec3 direction = Vec3::UnitX();
  double z = 0.0;
  double distance = 0.0;
  std::array<Vec3, 2> candidates;
  std::optional<Vec3> chosen;
  Validity validity = Validity::NoneInRoom;
};

PairMlResult estimate_link(const LinkMeasurement& link, const Deployment& anchor, double c,
                           const Room& room);

/// Which rule produced a pairML deployment.
enum class PairMlPick { Unique, FallbackBoth, FallbackNone };

struct PairMlEstimate {
  Deployment deployment;
  std::size_t anchor = 0;       // node id of the link that was used
  PairMlPick pick = PairMlPick::Unique;
  std::vector<PairMlResult> links;  // ascending in estimated distance
};

/// Per-agent closed-form deployment estimate from its agent-anchor links.
/// Links are visited in ascending order of ML distance; the first with a
/// unique in-room candidate wins. Without one, the nearest link is used:
/// BothInRoom takes the candidate closer to the room center, NoneInRoom the
/// candidate closer to the room, clamped into it.
/// `anchors[k]` is node id num_agents + k. Agent-agent links are ignored.
/// Throws NoMeasurements if no usable agent-anchor link exists.
PairMlEstimate pair_ml_estimate(std::span<const LinkMeasurement> agent_links,
                                std::span<const Deployment> anchors, std::size_t num_agents,
                                const CouplingTable& coupling, const Room& room);

}  // namespace miloc

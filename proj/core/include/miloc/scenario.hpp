#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "miloc/channel.hpp"
#include "miloc/estimators.hpp"
#include "miloc/geometry.hpp"

namespace miloc {

struct Topology {
  Room room;
  std::vector<Deployment> anchors;
  std::vector<Deployment> agents;
  std::uint64_t seed = 0;

  std::size_t num_agents() const { return agents.size(); }
  /// Agents first, then anchors (node id order).
  std::vector<Deployment> nodes() const;
};

/// Four anchors at the centers of the vertical walls, half height,
/// identity orientation.
std::vector<Deployment> default_anchors(const Room& room);

/// Agents uniform in the room with Haar orientations; whole configurations
/// are redrawn until every agent-agent and agent-anchor distance is at
/// least `min_dist`. Throws PackingInfeasible after `max_attempts` draws.
Topology sample_topology(std::size_t num_agents, const Room& room, std::vector<Deployment> anchors,
                         double min_dist, Rng& rng, std::size_t max_attempts = 100000);

/// Human-readable invariant violations (empty when valid). Anchor-anchor
/// distances are not checked.
std::vector<std::string> check_topology(const Topology& top, double min_dist);

struct MeasurementSet {
  std::vector<LinkMeasurement> links;
  Scheme scheme = Scheme::Cooperative;
  std::uint64_t noise_seed = 0;
};

/// Noiseless link set of a scheme: agent m to every anchor, plus (Coop)
/// every other agent, in the order m ascending, then node id ascending.
std::vector<LinkMeasurement> model_links(const Topology& top, const CouplingTable& coupling, Scheme scheme);

/// Model channel matrices plus independent CN(0, sigma^2) noise per link
/// and per entry.
MeasurementSet synthesize_measurements(const Topology& top, const CouplingTable& coupling, Scheme scheme,
                                       double sigma, Rng& rng);

LsProblem make_problem(const Topology& top, const MeasurementSet& meas, const CouplingTable& coupling);

/// Plain-text topology: '#'-prefixed header lines for room and seed, then
/// one node per row `id kind x y z alpha beta gamma` (kind = agent|anchor).
void write_topology(std::ostream& os, const Topology& top);
/// Throws Io on malformed input.
Topology read_topology(std::istream& is);

}  // namespace miloc

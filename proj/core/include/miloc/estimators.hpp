#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "miloc/channel.hpp"
#include "miloc/geometry.hpp"
#include "miloc/levenberg_marquardt.hpp"
#include "miloc/pair_ml.hpp"

namespace miloc {

enum class Scheme { Cooperative, NonCooperative };

/// Stacked per-agent [p_x, p_y, p_z, alpha, beta, gamma]; agent m owns
/// slots 6m .. 6m+5.
using ParameterVector = Eigen::VectorXd;

ParameterVector pack(std::span<const Deployment> agents);
/// Euler angles are taken as-is (no canonicalization).
std::vector<Deployment> unpack(const ParameterVector& theta);
/// Canonicalizes the Euler angles of every agent.
ParameterVector canonicalize(const ParameterVector& theta);

/// Least-squares localization problem over M agents and N known anchors.
/// NonCooperative keeps only agent-anchor links; Cooperative keeps every
/// ordered agent -> node link given.
class LsProblem {
 public:
  LsProblem(std::vector<LinkMeasurement> links, std::vector<Deployment> anchors,
            std::size_t num_agents, const CouplingTable& coupling, Scheme scheme);

  /// Single-agent problem (agent-anchor links of `agent` only). The agent
  /// becomes node 0 and anchor k becomes node 1 + k.
  LsProblem agent_subproblem(std::size_t agent) const;

  /// Same links and anchors with agent-agent links removed.
  LsProblem without_agent_links() const;

  std::size_t num_agents() const { return num_agents_; }
  std::size_t num_anchors() const { return anchors_.size(); }
  Eigen::Index dimension() const { return static_cast<Eigen::Index>(6 * num_agents_); }
  Eigen::Index residual_size() const { return static_cast<Eigen::Index>(9 * links_.size()); }
  Scheme scheme() const { return scheme_; }
  const std::vector<LinkMeasurement>& links() const { return links_; }
  const std::vector<Deployment>& anchors() const { return anchors_; }
  double link_coupling(std::size_t link) const { return coupling_[link]; }
  const CouplingTable& coupling_table() const { return table_; }

 private:
  LsProblem() = default;

  std::vector<LinkMeasurement> links_;
  std::vector<Deployment> anchors_;
  std::vector<double> coupling_;
  CouplingTable table_;
  std::size_t num_agents_ = 0;
  Scheme scheme_ = Scheme::Cooperative;
};

/// Residual Im{H_meas} - Im{H(theta)} stacked per link (9 entries, column
/// major), and its Jacobian with respect to theta when `J` is non-null.
/// Throws DimensionMismatch when theta does not have 6M entries.
void residual_and_jacobian(const ParameterVector& theta, const LsProblem& prob, Eigen::VectorXd& r,
                           Eigen::MatrixXd* J);

/// Sum of squared imaginary residuals.
double ls_cost(const ParameterVector& theta, const LsProblem& prob);

/// Full complex objective sum ||H_meas - H(theta)||_F^2 including the
/// parameter-independent real part.
double full_complex_cost(const ParameterVector& theta, const LsProblem& prob);

struct PerfectInit {
  std::vector<Deployment> truth;
};
struct RandomInit {
  int restarts = 1;
};
struct PairMlInit {};
using InitStrategy = std::variant<PerfectInit, RandomInit, PairMlInit>;

struct SolveReport {
  ParameterVector estimate;  // canonical Euler angles
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  int initializations_used = 0;
  /// Per-agent final cost for NonCooperative problems; a single entry
  /// (the joint cost) for Cooperative ones.
  std::vector<double> agent_costs;
};

/// One LM run from `init`. Agent-anchor links only affect their agent, so
/// this works for either scheme as a joint problem.
SolveReport solve_from(const ParameterVector& init, const LsProblem& prob, const LmOptions& opts = {});

/// pairML deployment for every agent of the problem.
std::vector<Deployment> pair_ml_all(const LsProblem& prob, const Room& room);

/// numLS / turboLS driver. NonCooperative solves M independent 6-D problems;
/// Cooperative solves one 6M-D problem. Random restarts keep the lowest
/// final cost (lowest run index on ties).
SolveReport estimate(const LsProblem& prob, const InitStrategy& init, const Room& room, Rng& rng,
                     const LmOptions& opts = {});

struct RangeMeasurement {
  Vec3 anchor;
  double range = 0.0;
};

struct MultilaterationResult {
  Vec3 position = Vec3::Zero();
  bool converged = false;
  bool under_determined = false;
  int iterations = 0;
};

/// ML distance to every anchor from the agent's agent-anchor links.
std::vector<RangeMeasurement> ml_ranges(std::span<const LinkMeasurement> agent_links,
                                        std::span<const Deployment> anchors, std::size_t num_agents,
                                        const CouplingTable& coupling);

/// argmin_p sum (||p - a_n|| - r_n)^2 by LM from the room center, clamped
/// into the room.
MultilaterationResult multilaterate(std::span<const RangeMeasurement> ranges, const Room& room,
                                    const LmOptions& opts = {});

}  // namespace miloc

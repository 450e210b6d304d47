#include "miloc/estimators.hpp"

#include <algorithm>
#include <limits>

#include "miloc/error.hpp"

namespace miloc {

ParameterVector pack(std::span<const Deployment> agents) {
  ParameterVector theta(static_cast<Eigen::Index>(6 * agents.size()));
  for (std::size_t m = 0; m < agents.size(); ++m) {
    const auto& d = agents[m];
    const auto o = static_cast<Eigen::Index>(6 * m);
    theta.segment<3>(o) = d.position();
    theta[o + 3] = d.euler().alpha;
    theta[o + 4] = d.euler().beta;
    theta[o + 5] = d.euler().gamma;
  }
  return theta;
}

std::vector<Deployment> unpack(const ParameterVector& theta) {
  if (theta.size() % 6 != 0) throw Error(ErrorKind::DimensionMismatch, "parameter length not a multiple of 6");
  std::vector<Deployment> out;
  out.reserve(static_cast<std::size_t>(theta.size() / 6));
  for (Eigen::Index o = 0; o < theta.size(); o += 6) {
    out.emplace_back(Vec3(theta.segment<3>(o)), EulerAngles{theta[o + 3], theta[o + 4], theta[o + 5]});
  }
  return out;
}

ParameterVector canonicalize(const ParameterVector& theta) {
  ParameterVector out = theta;
  for (Eigen::Index o = 0; o + 6 <= theta.size(); o += 6) {
    const auto e = canonicalize(EulerAngles{theta[o + 3], theta[o + 4], theta[o + 5]});
    out[o + 3] = e.alpha;
    out[o + 4] = e.beta;
    out[o + 5] = e.gamma;
  }
  return out;
}

LsProblem::LsProblem(std::vector<LinkMeasurement> links, std::vector<Deployment> anchors,
                     std::size_t num_agents, const CouplingTable& coupling, Scheme scheme)
    : anchors_(std::move(anchors)), table_(coupling), num_agents_(num_agents), scheme_(scheme) {
  const std::size_t nodes = num_agents_ + anchors_.size();
  links_.reserve(links.size());
  for (auto& l : links) {
    if (l.tx >= num_agents_ || l.rx >= nodes || l.tx == l.rx) {
      throw Error(ErrorKind::DimensionMismatch, "link endpoints do not match the network");
    }
    l.kind = l.rx < num_agents_ ? LinkKind::AgentAgent : LinkKind::AgentAnchor;
    if (scheme_ == Scheme::NonCooperative && l.kind == LinkKind::AgentAgent) continue;
    coupling_.push_back(table_(l.tx, l.rx));
    links_.push_back(std::move(l));
  }
}

LsProblem LsProblem::agent_subproblem(std::size_t agent) const {
  if (agent >= num_agents_) throw Error(ErrorKind::DimensionMismatch, "agent index out of range");
  LsProblem sub;
  sub.anchors_ = anchors_;
  sub.table_ = table_;
  sub.num_agents_ = 1;
  sub.scheme_ = Scheme::NonCooperative;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (l.tx != agent || l.kind != LinkKind::AgentAnchor) continue;
    LinkMeasurement copy = l;
    copy.tx = 0;
    copy.rx = l.rx - num_agents_ + 1;
    sub.links_.push_back(copy);
    sub.coupling_.push_back(coupling_[i]);
  }
  return sub;
}

LsProblem LsProblem::without_agent_links() const {
  LsProblem out = *this;
  out.links_.clear();
  out.coupling_.clear();
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i].kind == LinkKind::AgentAgent) continue;
    out.links_.push_back(links_[i]);
    out.coupling_.push_back(coupling_[i]);
  }
  return out;
}

void residual_and_jacobian(const ParameterVector& theta, const LsProblem& prob, Eigen::VectorXd& r,
                           Eigen::MatrixXd* J) {
  if (theta.size() != prob.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "parameter vector does not match problem");
  }
  const auto agents = unpack(theta);
  const auto& links = prob.links();
  const std::size_t M = prob.num_agents();

  r.resize(prob.residual_size());
  if (J != nullptr) J->setZero(prob.residual_size(), prob.dimension());

  for (std::size_t l = 0; l < links.size(); ++l) {
    const auto& link = links[l];
    const Deployment& tx = agents[link.tx];
    const Deployment& rx = link.rx < M ? agents[link.rx] : prob.anchors()[link.rx - M];
    const double c = prob.link_coupling(l);
    const auto row = static_cast<Eigen::Index>(9 * l);

    Mat3 model;
    if (J == nullptr) {
      model = channel_gains(tx, rx, c);
    } else {
      const auto d = channel_jacobian(tx, rx, c, &model);
      const auto ctx = static_cast<Eigen::Index>(6 * link.tx);
      for (int k = 0; k < 6; ++k) {
        J->block<9, 1>(row, ctx + k) = -Eigen::Map<const Eigen::Matrix<double, 9, 1>>(d.d_tx[k].data());
      }
      if (link.rx < M) {
        const auto crx = static_cast<Eigen::Index>(6 * link.rx);
        for (int k = 0; k < 6; ++k) {
          J->block<9, 1>(row, crx + k) = -Eigen::Map<const Eigen::Matrix<double, 9, 1>>(d.d_rx[k].data());
        }
      }
    }
    const Mat3 diff = link.h.imag() - model;
    r.segment<9>(row) = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(diff.data());
  }
}

double ls_cost(const ParameterVector& theta, const LsProblem& prob) {
  Eigen::VectorXd r;
  residual_and_jacobian(theta, prob, r, nullptr);
  return r.squaredNorm();
}

double full_complex_cost(const ParameterVector& theta, const LsProblem& prob) {
  const auto agents = unpack(theta);
  const std::size_t M = prob.num_agents();
  double cost = 0.0;
  for (std::size_t l = 0; l < prob.links().size(); ++l) {
    const auto& link = prob.links()[l];
    const Deployment& rx = link.rx < M ? agents[link.rx] : prob.anchors()[link.rx - M];
    cost += (link.h - channel_matrix(agents[link.tx], rx, prob.link_coupling(l))).squaredNorm();
  }
  return cost;
}

SolveReport solve_from(const ParameterVector& init, const LsProblem& prob, const LmOptions& opts) {
  const ResidualFunction f = [&prob](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    residual_and_jacobian(x, prob, r, J);
  };
  const auto lm = levenberg_marquardt(f, init, opts);
  SolveReport rep;
  rep.estimate = canonicalize(lm.x);
  rep.final_cost = lm.final_cost;
  rep.iterations = lm.iterations;
  rep.converged = lm.converged;
  rep.initializations_used = 1;
  rep.agent_costs = {lm.final_cost};
  return rep;
}

std::vector<Deployment> pair_ml_all(const LsProblem& prob, const Room& room) {
  std::vector<Deployment> out;
  out.reserve(prob.num_agents());
  std::vector<LinkMeasurement> agent_links;
  for (std::size_t m = 0; m < prob.num_agents(); ++m) {
    agent_links.clear();
    for (const auto& l : prob.links()) {
      if (l.tx == m && l.kind == LinkKind::AgentAnchor) agent_links.push_back(l);
    }
    out.push_back(pair_ml_estimate(agent_links, prob.anchors(), prob.num_agents(), prob.coupling_table(), room)
                      .deployment);
  }
  return out;
}

namespace {

Deployment random_deployment(const Room& room, Rng& rng) {
  const Vec3 p = room.sample_uniform(rng);
  return Deployment::from_rotation(p, sample_uniform_rotation(rng));
}

// Initial points for a problem whose agents are `agent_ids` of the original.
std::vector<ParameterVector> initial_points(const LsProblem& prob, const InitStrategy& init,
                                            std::span<const std::size_t> agent_ids, const Room& room,
                                            Rng& rng) {
  std::vector<ParameterVector> out;
  if (const auto* perfect = std::get_if<PerfectInit>(&init)) {
    std::vector<Deployment> truth;
    for (auto id : agent_ids) {
      if (id >= perfect->truth.size()) throw Error(ErrorKind::DimensionMismatch, "truth has too few agents");
      truth.push_back(perfect->truth[id]);
    }
    out.push_back(pack(truth));
  } else if (const auto* random = std::get_if<RandomInit>(&init)) {
    for (int k = 0; k < std::max(random->restarts, 1); ++k) {
      std::vector<Deployment> draw;
      for (std::size_t i = 0; i < agent_ids.size(); ++i) draw.push_back(random_deployment(room, rng));
      out.push_back(pack(draw));
    }
  } else {
    out.push_back(pack(pair_ml_all(prob, room)));
  }
  return out;
}

SolveReport best_of(const LsProblem& prob, const std::vector<ParameterVector>& inits, const LmOptions& opts) {
  SolveReport best;
  best.final_cost = std::numeric_limits<double>::infinity();
  int total_iterations = 0;
  for (const auto& x0 : inits) {
    auto rep = solve_from(x0, prob, opts);
    total_iterations += rep.iterations;
    if (rep.final_cost < best.final_cost || best.estimate.size() == 0) best = std::move(rep);
  }
  best.iterations = total_iterations;
  best.initializations_used = static_cast<int>(inits.size());
  return best;
}

}  // namespace

SolveReport estimate(const LsProblem& prob, const InitStrategy& init, const Room& room, Rng& rng,
                     const LmOptions& opts) {
  const std::size_t M = prob.num_agents();
  if (prob.scheme() == Scheme::Cooperative) {
    std::vector<std::size_t> ids(M);
    for (std::size_t m = 0; m < M; ++m) ids[m] = m;
    return best_of(prob, initial_points(prob, init, ids, room, rng), opts);
  }

  SolveReport out;
  out.estimate.resize(prob.dimension());
  out.converged = true;
  for (std::size_t m = 0; m < M; ++m) {
    const LsProblem sub = prob.agent_subproblem(m);
    const std::size_t id = m;
    const auto rep = best_of(sub, initial_points(sub, init, std::span(&id, 1), room, rng), opts);
    out.estimate.segment<6>(static_cast<Eigen::Index>(6 * m)) = rep.estimate;
    out.final_cost += rep.final_cost;
    out.iterations += rep.iterations;
    out.converged = out.converged && rep.converged;
    out.initializations_used = rep.initializations_used;
    out.agent_costs.push_back(rep.final_cost);
  }
  return out;
}

std::vector<RangeMeasurement> ml_ranges(std::span<const LinkMeasurement> agent_links,
                                        std::span<const Deployment> anchors, std::size_t num_agents,
                                        const CouplingTable& coupling) {
  std::vector<RangeMeasurement> out;
  for (const auto& link : agent_links) {
    if (link.kind != LinkKind::AgentAnchor || link.rx < num_agents) continue;
    const auto& anchor = anchors[link.rx - num_agents];
    try {
      const auto dec = decompose_link(link.h, anchor);
      out.push_back({anchor.position(), ml_distance(dec.z, coupling(link.tx, link.rx))});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateMeasurement && e.kind() != ErrorKind::ZeroScore) throw;
    }
  }
  return out;
}

MultilaterationResult multilaterate(std::span<const RangeMeasurement> ranges, const Room& room,
                                    const LmOptions& opts) {
  if (ranges.empty()) throw Error(ErrorKind::NoMeasurements, "multilateration needs at least one range");
  const ResidualFunction f = [ranges](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    const auto n = static_cast<Eigen::Index>(ranges.size());
    r.resize(n);
    if (J != nullptr) J->setZero(n, 3);
    const Vec3 p = x.head<3>();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 d = p - ranges[static_cast<std::size_t>(i)].anchor;
      const double dist = d.norm();
      r[i] = dist - ranges[static_cast<std::size_t>(i)].range;
      if (J != nullptr && dist > 0.0) J->row(i) = d.transpose() / dist;
    }
  };
  const auto lm = levenberg_marquardt(f, room.center(), opts);
  MultilaterationResult out;
  out.position = room.clamp(lm.x.head<3>());
  out.converged = lm.converged;
  out.iterations = lm.iterations;
  out.under_determined = ranges.size() < 3;
  return out;
}

}  // namespace miloc

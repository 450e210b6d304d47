#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "miloc/channel.hpp"
#include "miloc/estimators.hpp"

namespace miloc {

using Mat6 = Eigen::Matrix<double, 6, 6>;

/// (2 / sigma^2) Re trace(dH^H/dtheta_k dH/dtheta_l) for one link, where
/// `a` and `b` hold Im{dH} for the two parameter blocks. With H = j G the
/// trace reduces to sum(dG_k .* dG_l).
Mat6 fim_block(const std::array<Mat3, 6>& a, const std::array<Mat3, 6>& b, double sigma);

/// Per-link information pieces, indexed like the paper-style block layout.
struct LinkFim {
  Mat6 tx_tx;  // information on the transmitting agent
  Mat6 rx_rx;  // information on the receiving node's deployment
  Mat6 tx_rx;  // cross term between the two
};

LinkFim link_fim(const Deployment& tx, const Deployment& rx, double c, double sigma);

/// 6M x 6M Fisher information over stacked agent deployments, same slot
/// layout as ParameterVector.
struct FisherInfo {
  Eigen::MatrixXd matrix;
  std::size_t num_agents = 0;
  Scheme scheme = Scheme::Cooperative;

  /// Diagonal 6x6 block of agent m.
  Mat6 block(std::size_t m, std::size_t n) const {
    return matrix.block<6, 6>(static_cast<Eigen::Index>(6 * m), static_cast<Eigen::Index>(6 * n));
  }
};

/// Cooperative: diagonal blocks N_m + C_mm, off-diagonal C_mn, summed over
/// every ordered agent -> node link (m, n), n != m, which is the link set
/// measured by the cooperative scheme. NonCooperative: diag(N_1 .. N_M).
FisherInfo assemble_fim(std::span<const Deployment> agents, std::span<const Deployment> anchors,
                        const CouplingTable& coupling, double sigma, Scheme scheme);

/// FIM computed as (2 / sigma^2) J^T J from the least-squares Jacobian of
/// `prob` at `theta`. Independent route to assemble_fim.
Eigen::MatrixXd fim_from_jacobian(const ParameterVector& theta, const LsProblem& prob, double sigma);

/// sqrt of the three position entries of the inverse FIM for `agent`.
/// Throws SingularFim when the condition number exceeds `max_condition`;
/// the message carries the null-space direction.
double peb(const FisherInfo& fim, std::size_t agent, double max_condition = 1e14);

/// PEB of every agent from one factorization.
std::vector<double> peb_all(const FisherInfo& fim, double max_condition = 1e14);

/// Non-cooperative PEB from the agent's own 6x6 block.
double peb_blockwise(const FisherInfo& fim, std::size_t agent, double max_condition = 1e14);

}  // namespace miloc

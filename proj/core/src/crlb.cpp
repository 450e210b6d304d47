#include "miloc/crlb.hpp"

#include <cmath>
#include <sstream>

#include "miloc/error.hpp"

namespace miloc {

Mat6 fim_block(const std::array<Mat3, 6>& a, const std::array<Mat3, 6>& b, double sigma) {
  Mat6 out;
  const double scale = 2.0 / (sigma * sigma);
  for (int k = 0; k < 6; ++k) {
    for (int l = 0; l < 6; ++l) {
      // trace(a_k^T b_l)
      out(k, l) = scale * a[k].cwiseProduct(b[l]).sum();
    }
  }
  return out;
}

LinkFim link_fim(const Deployment& tx, const Deployment& rx, double c, double sigma) {
  const auto J = channel_jacobian(tx, rx, c);
  return LinkFim{fim_block(J.d_tx, J.d_tx, sigma), fim_block(J.d_rx, J.d_rx, sigma),
                 fim_block(J.d_tx, J.d_rx, sigma)};
}

FisherInfo assemble_fim(std::span<const Deployment> agents, std::span<const Deployment> anchors,
                        const CouplingTable& coupling, double sigma, Scheme scheme) {
  const std::size_t M = agents.size();
  FisherInfo fim;
  fim.num_agents = M;
  fim.scheme = scheme;
  fim.matrix.setZero(static_cast<Eigen::Index>(6 * M), static_cast<Eigen::Index>(6 * M));

  auto at = [&fim](std::size_t m, std::size_t n) {
    return fim.matrix.block<6, 6>(static_cast<Eigen::Index>(6 * m), static_cast<Eigen::Index>(6 * n));
  };

  for (std::size_t m = 0; m < M; ++m) {
    // N_m: agent-anchor links
    for (std::size_t k = 0; k < anchors.size(); ++k) {
      const auto J = channel_jacobian(agents[m], anchors[k], coupling(m, M + k));
      at(m, m) += fim_block(J.d_tx, J.d_tx, sigma);
    }
    if (scheme == Scheme::NonCooperative) continue;
    // C_mm and C_mn: link (m, n) informs psi_m, psi_n and their coupling.
    for (std::size_t n = 0; n < M; ++n) {
      if (n == m) continue;
      const auto f = link_fim(agents[m], agents[n], coupling(m, n), sigma);
      at(m, m) += f.tx_tx;
      at(n, n) += f.rx_rx;
      at(m, n) += f.tx_rx;
      at(n, m) += f.tx_rx.transpose();
    }
  }
  return fim;
}

Eigen::MatrixXd fim_from_jacobian(const ParameterVector& theta, const LsProblem& prob, double sigma) {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residual_and_jacobian(theta, prob, r, &J);
  return (2.0 / (sigma * sigma)) * J.transpose() * J;
}

namespace {

// Inverse of a symmetric PSD matrix via eigendecomposition with a
// condition-number guard.
Eigen::MatrixXd guarded_inverse(const Eigen::MatrixXd& A, double max_condition) {
  if (A.size() == 0) throw Error(ErrorKind::SingularFim, "empty information matrix");
  const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularFim, "eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  const double bottom = ev.minCoeff();
  if (!(top > 0.0) || !(bottom > 0.0) || top / bottom > max_condition) {
    std::ostringstream msg;
    msg << "condition number " << (bottom > 0.0 ? top / bottom : INFINITY) << "; null direction [";
    const Eigen::VectorXd v = es.eigenvectors().col(0);
    for (Eigen::Index i = 0; i < v.size(); ++i) msg << (i ? " " : "") << v[i];
    msg << "]";
    throw Error(ErrorKind::SingularFim, msg.str());
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

double position_bound(const Eigen::MatrixXd& inv, Eigen::Index offset) {
  return std::sqrt(inv(offset, offset) + inv(offset + 1, offset + 1) + inv(offset + 2, offset + 2));
}

}  // namespace

double peb(const FisherInfo& fim, std::size_t agent, double max_condition) {
  if (agent >= fim.num_agents) throw Error(ErrorKind::DimensionMismatch, "agent index out of range");
  return position_bound(guarded_inverse(fim.matrix, max_condition), static_cast<Eigen::Index>(6 * agent));
}

std::vector<double> peb_all(const FisherInfo& fim, double max_condition) {
  const auto inv = guarded_inverse(fim.matrix, max_condition);
  std::vector<double> out(fim.num_agents);
  for (std::size_t m = 0; m < fim.num_agents; ++m) out[m] = position_bound(inv, static_cast<Eigen::Index>(6 * m));
  return out;
}

double peb_blockwise(const FisherInfo& fim, std::size_t agent, double max_condition) {
  if (agent >= fim.num_agents) throw Error(ErrorKind::DimensionMismatch, "agent index out of range");
  return position_bound(guarded_inverse(fim.block(agent, agent), max_condition), 0);
}

}  // namespace miloc

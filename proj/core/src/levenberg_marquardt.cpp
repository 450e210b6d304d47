#include "miloc/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>

namespace miloc {

LmReport levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd init, const LmOptions& opts) {
  LmReport rep;
  rep.x = std::move(init);

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  f(rep.x, r, &J);
  ++rep.evaluations;
  double cost = r.squaredNorm();
  rep.final_cost = cost;
  if (opts.record_history) rep.cost_history.push_back(cost);

  if (!std::isfinite(cost)) {
    rep.stop = LmStop::NonFinite;
    return rep;
  }
  if (cost == 0.0) {
    rep.converged = true;
    rep.stop = LmStop::ZeroCost;
    return rep;
  }

  const Eigen::Index n = rep.x.size();
  Eigen::MatrixXd JtJ(n, n);
  Eigen::VectorXd g(n);
  Eigen::VectorXd r_trial;
  double lambda = opts.initial_lambda;

  auto normal_equations = [&] {
    JtJ.setZero();
    JtJ.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
    JtJ.triangularView<Eigen::StrictlyUpper>() = JtJ.transpose();
    g.noalias() = J.transpose() * r;
  };
  normal_equations();

  while (rep.iterations < opts.max_iterations) {
    const Eigen::VectorXd diag = JtJ.diagonal();
    const double floor = std::max(diag.maxCoeff() * 1e-12, 1e-300);

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * diag.cwiseMax(floor);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      Eigen::VectorXd step;
      if (ldlt.info() == Eigen::Success) step = ldlt.solve(-g);

      if (step.size() != n || !step.allFinite()) {
        lambda *= opts.lambda_factor;
        if (lambda > opts.lambda_max) {
          rep.stop = LmStop::DampingExhausted;
          return rep;
        }
        continue;
      }
      if (step.norm() < opts.step_tolerance) {
        rep.converged = true;
        rep.stop = LmStop::StepTolerance;
        return rep;
      }

      const Eigen::VectorXd x_trial = rep.x + step;
      f(x_trial, r_trial, nullptr);
      ++rep.evaluations;
      const double trial_cost = r_trial.squaredNorm();

      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rel = (cost - trial_cost) / cost;
        rep.x = x_trial;
        cost = trial_cost;
        rep.final_cost = cost;
        ++rep.iterations;
        if (opts.record_history) rep.cost_history.push_back(cost);
        lambda = std::max(lambda / opts.lambda_factor, 1e-20);
        accepted = true;

        if (cost == 0.0) {
          rep.converged = true;
          rep.stop = LmStop::ZeroCost;
          return rep;
        }
        if (rel < opts.relative_cost_tolerance) {
          rep.converged = true;
          rep.stop = LmStop::CostTolerance;
          return rep;
        }
        f(rep.x, r, &J);
        ++rep.evaluations;
        normal_equations();
      } else {
        lambda *= opts.lambda_factor;
        if (lambda > opts.lambda_max) {
          rep.stop = LmStop::DampingExhausted;
          return rep;
        }
      }
    }
  }
  rep.stop = LmStop::MaxIterations;
  return rep;
}

}  // namespace miloc

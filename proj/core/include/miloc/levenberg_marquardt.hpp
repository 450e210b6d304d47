#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace miloc {

/// Marquardt damping: (J^T J + lambda diag(J^T J)) step = -J^T r.
struct LmOptions {
  double initial_lambda = 1e-3;
  double lambda_factor = 10.0;
  double lambda_max = 1e12;
  double step_tolerance = 1e-10;
  double relative_cost_tolerance = 1e-12;
  int max_iterations = 500;
  bool record_history = false;
};

enum class LmStop { ZeroCost, StepTolerance, CostTolerance, MaxIterations, DampingExhausted, NonFinite };

struct LmReport {
  Eigen::VectorXd x;
  double final_cost = 0.0;  // sum of squared residuals
  int iterations = 0;       // accepted steps
  int evaluations = 0;
  bool converged = false;
  LmStop stop = LmStop::MaxIterations;
  std::vector<double> cost_history;  // accepted costs, starting with the initial one
};

/// Fills `r` at `x`, and `J` (rows = residuals) when the pointer is non-null.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J)>;

LmReport levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd init, const LmOptions& opts = {});

}  // namespace miloc

#pragma once

#include <Eigen/Dense>

namespace releaseflow {

/// Finite-difference solution of u_t = d u_xx on [0, 1] x [0, t_max] with
/// u(x, 0) = 1 in the interior and u = 0 on both boundaries.
struct PdeOracleSolution {
  Eigen::MatrixXd u;  // (nt x nx): row n is time level n
  int nx = 0;
  int nt = 0;
  double d_hat = 0.0;
  double t_max = 1.0;

  double dx() const { return 1.0 / (nx - 1); }
  double dt() const { return t_max / (nt - 1); }
  /// 1 - trapezoidal spatial mean at time level n (0 at level 0).
  double release_at_level(int n) const;
  /// Release at arbitrary t, interpolated linearly in sqrt(t) between time levels.
  double release_fraction(double t) const;
};

/// Crank-Nicolson with a Thomas tridiagonal solve. The first time step is taken
/// as two implicit-Euler half steps (Rannacher start-up) so the discontinuity
/// between the initial and boundary values cannot seed oscillations.
PdeOracleSolution solve_pde_oracle(double d_hat, int nx, int nt, double t_max = 1.0);

}  // namespace releaseflow

#include "releaseflow/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "releaseflow/error.hpp"

namespace releaseflow {

namespace {

// Solves (1 + 2a) v_j - a v_{j-1} - a v_{j+1} = rhs_j for the interior nodes
// with homogeneous Dirichlet ends.
void thomas_symmetric(double a, std::vector<double>& rhs) {
  const std::size_t m = rhs.size();
  if (m == 0) return;
  std::vector<double> c_prime(m);
  const double diag = 1.0 + 2.0 * a;
  double denom = diag;
  c_prime[0] = -a / denom;
  rhs[0] /= denom;
  for (std::size_t j = 1; j < m; ++j) {
    denom = diag + a * c_prime[j - 1];
    c_prime[j] = -a / denom;
    rhs[j] = (rhs[j] + a * rhs[j - 1]) / denom;
  }
  for (std::size_t j = m - 1; j-- > 0;) rhs[j] -= c_prime[j] * rhs[j + 1];
}

}  // namespace

double PdeOracleSolution::release_at_level(int n) const {
  // At t = 0 the field is the uniform initial value; the zero boundary nodes
  // only take effect for t > 0.
  if (n == 0) return 0.0;
  const auto row = u.row(n);
  double integral = 0.5 * (row[0] + row[nx - 1]);
  for (int j = 1; j < nx - 1; ++j) integral += row[j];
  return 1.0 - integral * dx();
}

double PdeOracleSolution::release_fraction(double t) const {
  require(t >= 0.0 && t <= t_max * (1.0 + 1e-12), "t outside the solved interval");
  const double pos = std::min(t / dt(), static_cast<double>(nt - 1));
  const int lo = std::min(static_cast<int>(std::floor(pos)), nt - 2);
  // Interpolate in sqrt(t): early release grows like sqrt(t), so this is exact
  // inside the first steps and second-order accurate elsewhere.
  const double s_lo = std::sqrt(static_cast<double>(lo));
  const double s_hi = std::sqrt(static_cast<double>(lo + 1));
  const double w = (std::sqrt(pos) - s_lo) / (s_hi - s_lo);
  return (1.0 - w) * release_at_level(lo) + w * release_at_level(lo + 1);
}

PdeOracleSolution solve_pde_oracle(double d_hat, int nx, int nt, double t_max) {
  require(nx >= 3, "nx must be >= 3");
  require(nt >= 2, "nt must be >= 2");
  require(d_hat >= 0.0, "d_hat must be non-negative");
  require(t_max > 0.0, "t_max must be positive");

  PdeOracleSolution sol;
  sol.nx = nx;
  sol.nt = nt;
  sol.d_hat = d_hat;
  sol.t_max = t_max;
  sol.u = Eigen::MatrixXd::Zero(nt, nx);
  sol.u.row(0).segment(1, nx - 2).setOnes();

  const double dx = sol.dx();
  const double dt = sol.dt();
  const double r = d_hat * dt / (dx * dx);
  const std::size_t m = static_cast<std::size_t>(nx - 2);
  std::vector<double> v(m, 1.0);
  std::vector<double> rhs(m);

  auto implicit_euler = [&](double ratio) {
    rhs = v;
    thomas_symmetric(ratio, rhs);
    v = rhs;
  };
  auto crank_nicolson = [&]() {
    const double a = 0.5 * r;
    for (std::size_t j = 0; j < m; ++j) {
      const double left = j > 0 ? v[j - 1] : 0.0;
      const double right = j + 1 < m ? v[j + 1] : 0.0;
      rhs[j] = (1.0 - 2.0 * a) * v[j] + a * (left + right);
    }
    thomas_symmetric(a, rhs);
    v = rhs;
  };

  for (int n = 1; n < nt; ++n) {
    if (n == 1) {
      implicit_euler(0.5 * r);
      implicit_euler(0.5 * r);
    } else {
      crank_nicolson();
    }
    for (std::size_t j = 0; j < m; ++j) sol.u(n, static_cast<Eigen::Index>(j + 1)) = v[j];
  }
  return sol;
}

}  // namespace releaseflow

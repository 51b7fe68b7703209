#include "sfw/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace sfw {

namespace {

double power_iteration_top_eigenvalue(const Mat& g) {
  const auto n = g.rows();
  Vec v = Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double ev = 0.0;
  for (int it = 0; it < 50; ++it) {
    Vec w = g * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double ev_new = v.dot(g * v);
    if (it > 0 && std::abs(ev_new - ev) <= 1e-8 * std::abs(ev_new)) return ev_new;
    ev = ev_new;
  }
  return ev;
}

double prox_threshold(double v, double t, int sign) {
  if (sign > 0) return std::max(v - t, 0.0);
  if (sign < 0) return std::min(v + t, 0.0);
  return v > t ? v - t : (v < -t ? v + t : 0.0);
}

}  // namespace

double lipschitz_estimate(const Kernel& kernel, const std::vector<Vec>& positions) {
  AtomMatrix atoms = atom_matrices(kernel, positions, /*with_derivatives=*/false);
  Mat gram = atoms.phi.transpose() * atoms.phi;
  return 1.01 * power_iteration_top_eigenvalue(gram);
}

LassoResult lasso_fixed_support(const Kernel& kernel, const std::vector<Vec>& positions,
                                const Vec& y, double lambda, const LassoConfig& cfg,
                                const Eigen::VectorXi& signs_in) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lasso_fixed_support: lambda must be positive");
  const int n = static_cast<int>(positions.size());
  LassoResult res;
  if (n == 0) {
    res.objective = 0.5 * y.squaredNorm();
    res.converged = true;
    return res;
  }
  Eigen::VectorXi signs = signs_in;
  if (signs.size() == 0)
    signs = Eigen::VectorXi::Constant(n, cfg.sign_mode == SignMode::NonNegative ? 1 : 0);
  if (signs.size() != n)
    throw std::invalid_argument("lasso_fixed_support: sign vector size mismatch");

  AtomMatrix atoms = atom_matrices(kernel, positions, /*with_derivatives=*/false);
  const Mat gram = atoms.phi.transpose() * atoms.phi;
  const Vec rhs = atoms.phi.transpose() * y;
  const double offset = 0.5 * y.squaredNorm();
  double lip = 1.01 * power_iteration_top_eigenvalue(gram);
  if (!(lip > 0.0)) lip = 1.0;
  const double step = 1.0 / lip;

  auto objective = [&](const Vec& a) {
    return 0.5 * a.dot(gram * a) - rhs.dot(a) + offset + lambda * a.lpNorm<1>();
  };
  auto prox_step = [&](const Vec& v) {
    Vec g = gram * v - rhs;
    Vec out(n);
    for (int i = 0; i < n; ++i)
      out[i] = prox_threshold(v[i] - step * g[i], step * lambda, signs[i]);
    return out;
  };

  Vec x = Vec::Zero(n);
  Vec momentum = x;
  double fx = objective(x);
  double t = 1.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    Vec x_new = prox_step(momentum);
    double f_new = objective(x_new);
    if (f_new > fx) {
      // Function-value restart: discard the momentum and take a plain
      // proximal-gradient step from the last iterate, which cannot increase.
      t = 1.0;
      x_new = prox_step(x);
      f_new = objective(x_new);
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum = x_new + ((t - 1.0) / t_new) * (x_new - x);
    const double drop = fx - f_new;
    x = x_new;
    fx = f_new;
    t = t_new;
    res.iterations = it;
    if (drop <= cfg.tol * (1.0 + std::abs(fx))) {
      // A flat stretch alone is not convergence (momentum phases stall);
      // additionally require the prox-gradient residual to certify that the
      // remaining objective gap is below the tolerance.
      const double resid = (x - prox_step(x)).lpNorm<Eigen::Infinity>();
      if (0.5 * lip * resid * resid <= cfg.tol * (1.0 + std::abs(fx))) {
        // Polish with plain proximal-gradient steps; on the identified active
        // set these contract linearly and land on the fixed point.
        for (int extra = 0; extra < 30; ++extra) x = prox_step(x);
        fx = objective(x);
        res.converged = true;
        break;
      }
    }
  }
  res.amplitudes = x;
  res.objective = fx;
  return res;
}

namespace {

/// Flattened parameter vector [a_1..a_N, x_1, ..., x_N] for the joint descent.
struct JointProblem {
  const Kernel& kernel;
  const Vec& y;
  double lambda;
  Eigen::VectorXi signs;
  int n;
  int d;

  int size() const { return n * (1 + d); }

  Vec pos(const Vec& theta, int i) const { return theta.segment(n + i * d, d); }

  Vec project(Vec theta) const {
    const auto& b = kernel.domain().upper();
    for (int i = 0; i < n; ++i) {
      if (signs[i] > 0) theta[i] = std::max(theta[i], 0.0);
      if (signs[i] < 0) theta[i] = std::min(theta[i], 0.0);
      for (int j = 0; j < d; ++j) {
        double& v = theta[n + i * d + j];
        v = std::min(std::max(v, 0.0), b[j]);
      }
    }
    return theta;
  }

  double value(const Vec& theta) const {
    Vec r = -y;
    double l1 = 0.0;
    for (int i = 0; i < n; ++i) {
      r += theta[i] * kernel.phi(pos(theta, i));
      l1 += std::abs(theta[i]);
    }
    return 0.5 * r.squaredNorm() + lambda * l1;
  }

  double value_and_gradient(const Vec& theta, Vec& grad) const {
    Vec r = -y;
    double l1 = 0.0;
    std::vector<Vec> phis(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      phis[static_cast<std::size_t>(i)] = kernel.phi(pos(theta, i));
      r += theta[i] * phis[static_cast<std::size_t>(i)];
      l1 += std::abs(theta[i]);
    }
    grad.resize(size());
    for (int i = 0; i < n; ++i) {
      grad[i] = phis[static_cast<std::size_t>(i)].dot(r) + lambda * static_cast<double>(signs[i]);
      Mat g = kernel.grad_phi(pos(theta, i));
      grad.segment(n + i * d, d) = theta[i] * (g.transpose() * r);
    }
    return 0.5 * r.squaredNorm() + lambda * l1;
  }
};

}  // namespace

DescentResult local_descent(const Kernel& kernel, const Vec& a0, const std::vector<Vec>& x0,
                            const Vec& y, double lambda, const DescentConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  if (a0.size() != n) throw std::invalid_argument("local_descent: amplitude/position size mismatch");
  DescentResult res;
  if (n == 0) {
    res.objective = 0.5 * y.squaredNorm();
    res.converged = true;
    return res;
  }
  Eigen::VectorXi signs(n);
  for (int i = 0; i < n; ++i) {
    if (a0[i] == 0.0)
      throw std::invalid_argument("local_descent: zero-amplitude spikes must be pruned first");
    signs[i] = a0[i] > 0.0 ? 1 : -1;
  }
  JointProblem prob{kernel, y, lambda, signs, n, kernel.dim()};

  Vec theta(prob.size());
  theta.head(n) = a0;
  for (int i = 0; i < n; ++i) theta.segment(n + i * prob.d, prob.d) = x0[static_cast<std::size_t>(i)];
  theta = prob.project(theta);

  Vec grad;
  double f = prob.value_and_gradient(theta, grad);
  res.objective_trace.push_back(f);

  const double tol = cfg.grad_tol * std::max(1.0, lambda);
  std::deque<std::pair<Vec, Vec>> pairs;  // (s, y) quasi-Newton history

  auto active_mask = [&](const Vec& th, const Vec& g) {
    Eigen::ArrayXd mask = Eigen::ArrayXd::Ones(prob.size());
    const double eps = 1e-12;
    const auto& b = kernel.domain().upper();
    for (int i = 0; i < n; ++i) {
      if (signs[i] > 0 && th[i] <= eps && g[i] > 0.0) mask[i] = 0.0;
      if (signs[i] < 0 && th[i] >= -eps && g[i] < 0.0) mask[i] = 0.0;
      for (int j = 0; j < prob.d; ++j) {
        const int idx = n + i * prob.d + j;
        if ((th[idx] <= eps && g[idx] > 0.0) || (th[idx] >= b[j] - eps && g[idx] < 0.0))
          mask[idx] = 0.0;
      }
    }
    return mask;
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    Vec pg = theta - prob.project(theta - grad);
    if (pg.lpNorm<Eigen::Infinity>() <= tol) {
      res.converged = true;
      break;
    }
    const Eigen::ArrayXd mask = active_mask(theta, grad);
    Vec q = (grad.array() * mask).matrix();

    // Two-loop recursion restricted to the free coordinates.
    std::vector<double> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, yv] = pairs[static_cast<std::size_t>(i)];
      const double rho = 1.0 / yv.dot(s);
      alpha[static_cast<std::size_t>(i)] = rho * s.dot(q);
      q -= alpha[static_cast<std::size_t>(i)] * yv;
    }
    if (!pairs.empty()) {
      const auto& [s, yv] = pairs.back();
      q *= s.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, yv] = pairs[i];
      const double rho = 1.0 / yv.dot(s);
      const double beta = rho * yv.dot(q);
      q += (alpha[i] - beta) * s;
    }
    Vec dir = -(q.array() * mask).matrix();
    if (dir.dot(grad) >= 0.0) dir = -(grad.array() * mask).matrix();

    // Backtracking Armijo search along the projected arc.
    const double c1 = 1e-4;
    double step = 1.0;
    bool accepted = false;
    Vec theta_new;
    double f_new = f;
    for (int ls = 0; ls < 50; ++ls) {
      theta_new = prob.project(theta + step * dir);
      f_new = prob.value(theta_new);
      const double pred = grad.dot(theta_new - theta);
      if (f_new <= f + c1 * std::min(pred, 0.0) && f_new < f) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it;
    if (!accepted) {
      res.line_search_failure = true;
      break;
    }
    Vec grad_new;
    const double f_check = prob.value_and_gradient(theta_new, grad_new);
    Vec s = theta_new - theta;
    Vec yv = grad_new - grad;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      pairs.emplace_back(std::move(s), std::move(yv));
      if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
    }
    theta = std::move(theta_new);
    grad = std::move(grad_new);
    f = f_check;
    res.objective_trace.push_back(f);
  }

  res.amplitudes = theta.head(n);
  res.positions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) res.positions[static_cast<std::size_t>(i)] = prob.pos(theta, i);
  res.objective = f;
  return res;
}

ArgmaxResult argmax_certificate(const Certificate& cert, const std::vector<int>& grid_per_axis,
                                bool positive_only) {
  const Kernel& kernel = cert.kernel();
  const int d = kernel.dim();
  if (static_cast<int>(grid_per_axis.size()) != d)
    throw std::invalid_argument("argmax_certificate: grid size must match the domain dimension");
  std::vector<Vec> axes;
  for (int j = 0; j < d; ++j) {
    const int nj = grid_per_axis[static_cast<std::size_t>(j)];
    if (nj < 2) throw std::invalid_argument("argmax_certificate: need >= 2 grid nodes per axis");
    Vec g(nj);
    for (int i = 0; i < nj; ++i) g[i] = kernel.domain().upper()[j] * i / (nj - 1);
    axes.push_back(std::move(g));
  }
  const Vec values = cert.on_grid(axes);

  Eigen::Index best_flat = 0;
  double best = positive_only ? values[0] : std::abs(values[0]);
  for (Eigen::Index flat = 1; flat < values.size(); ++flat) {
    const double v = positive_only ? values[flat] : std::abs(values[flat]);
    if (v > best) {
      best = v;
      best_flat = flat;
    }
  }
  Vec x(d);
  {
    Eigen::Index rem = best_flat;
    for (int j = d - 1; j >= 0; --j) {
      const auto nj = axes[static_cast<std::size_t>(j)].size();
      x[j] = axes[static_cast<std::size_t>(j)][rem % nj];
      rem /= nj;
    }
  }

  const double sign = positive_only ? 1.0 : (cert(x) >= 0.0 ? 1.0 : -1.0);
  auto q = [&](const Vec& p) { return sign * cert(p); };

  double h_min = std::numeric_limits<double>::infinity();
  double h_max = 0.0;
  for (int j = 0; j < d; ++j) {
    const double h = kernel.domain().upper()[j] / (grid_per_axis[static_cast<std::size_t>(j)] - 1);
    h_min = std::min(h_min, h);
    h_max = std::max(h_max, h);
  }
  const double fd = h_min / 100.0;

  double qx = q(x);
  for (int it = 0; it < 40; ++it) {
    Vec g = sign * cert.gradient(x);
    const double gnorm = g.norm();
    if (gnorm <= 1e-14 * (1.0 + std::abs(qx))) break;
    Vec u = g / gnorm;
    Vec xp = kernel.domain().clamp(x + fd * u);
    Vec xm = kernel.domain().clamp(x - fd * u);
    const double curv = (q(xp) - 2.0 * qx + q(xm)) / (fd * fd);
    double step = (curv < 0.0) ? std::min(gnorm / (-curv), 2.0 * h_max) : h_max;
    bool improved = false;
    for (int ls = 0; ls < 25; ++ls) {
      Vec x_new = kernel.domain().clamp(x + step * u);
      const double q_new = q(x_new);
      if (q_new > qx) {
        x = std::move(x_new);
        const double gain = q_new - qx;
        qx = q_new;
        improved = gain > 1e-15 * (1.0 + std::abs(qx));
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  // The refinement is monotone from the grid maximizer, so qx >= best.
  return {x, qx};
}

}  // namespace sfw

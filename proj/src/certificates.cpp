#include "sfw/certificates.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

namespace sfw {

namespace {

constexpr double kMaxCondition = 1e12;

/// Minimum-norm solution p of A^T p = b via the SVD of A (M x n, M >= n).
/// Reports the condition number of A; throws when A is numerically rank
/// deficient so a silent bad solve is impossible.
Vec min_norm_adjoint_solve(const Mat& a, const Vec& b, const char* what, double* cond_out) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();
  if (cond_out) *cond_out = cond;
  if (!(cond < kMaxCondition))
    throw ConstructionError(std::string(what) + ": derivative system is rank deficient", cond);
  return svd.matrixU() * (svd.matrixV().transpose() * b).cwiseQuotient(sv);
}

double factorial_d(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double binom_d(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// p-th derivative of xi(x) = sqrt(2x).
double sqrt2x_deriv(int p, double x) {
  double c = std::sqrt(2.0);
  for (int l = 0; l < p; ++l) c *= (0.5 - l);
  return c * std::pow(x, 0.5 - p);
}

}  // namespace

const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::EtaLambda: return "eta_lambda";
    case CertificateKind::EtaV: return "eta_v";
    case CertificateKind::EtaW: return "eta_w";
  }
  return "unknown";
}

Certificate eta_lambda(std::shared_ptr<const Kernel> kernel, const Vec& y, double lambda,
                       const DiscreteMeasure& m) {
  if (!(lambda > 0.0)) throw std::invalid_argument("eta_lambda: lambda must be positive");
  if (y.size() != kernel->obs_dim())
    throw std::invalid_argument("eta_lambda: observation size does not match the kernel");
  Vec p = (y - apply_forward(*kernel, m)) / lambda;
  return Certificate(CertificateKind::EtaLambda, std::move(kernel), std::move(p));
}

Certificate eta_v(std::shared_ptr<const Kernel> kernel, const DiscreteMeasure& m0) {
  if (m0.empty()) throw std::invalid_argument("eta_v: measure must have at least one spike");
  const int n = m0.size();
  const int d = kernel->dim();
  AtomMatrix atoms = atom_matrices(*kernel, m0.position_list(), /*with_derivatives=*/true);
  Vec b = Vec::Zero(n * (1 + d));
  for (int i = 0; i < n; ++i) b[i] = m0.spike(i).amplitude >= 0.0 ? 1.0 : -1.0;
  double cond = 0.0;
  Vec p = min_norm_adjoint_solve(atoms.joint(), b, "eta_v", &cond);
  return Certificate(CertificateKind::EtaV, std::move(kernel), std::move(p), cond);
}

Certificate eta_w(std::shared_ptr<const Kernel> kernel, double x_c, int n_spikes) {
  if (kernel->dim() != 1) throw std::invalid_argument("eta_w: only defined for 1-D kernels");
  if (n_spikes < 1) throw std::invalid_argument("eta_w: spike count must be >= 1");
  const int order = 2 * n_spikes - 1;
  Mat f = kernel->derivative_stack(x_c, order);
  Vec delta = Vec::Zero(order + 1);
  delta[0] = 1.0;
  double cond = 0.0;
  Vec p = min_norm_adjoint_solve(f, delta, "eta_w", &cond);
  return Certificate(CertificateKind::EtaW, std::move(kernel), std::move(p), cond, n_spikes);
}

double closed_form_eta_w_laplace(double x, double x_c, int n_spikes, bool normalized) {
  if (!(x > 0.0) || !(x_c > 0.0))
    throw std::domain_error("closed_form_eta_w_laplace: requires x > 0 and x_c > 0");
  if (n_spikes < 1) throw std::invalid_argument("closed_form_eta_w_laplace: n_spikes must be >= 1");
  const double u = (x - x_c) / (x + x_c);
  if (!normalized) return 1.0 - std::pow(u, 2 * n_spikes);
  double sum = 0.0;
  for (int k = 0; k < n_spikes; ++k)
    sum += factorial_d(2 * k) / (std::pow(2.0, 2 * k) * factorial_d(k) * factorial_d(k)) *
           std::pow(u, 2 * k);
  return 2.0 * std::sqrt(x * x_c) / (x + x_c) * sum;
}

double LaplaceCorrelation::partial(int i, int j, double x, double xp) const {
  if (!(x + xp > 0.0))
    throw std::domain_error("LaplaceCorrelation: singular at x + x' = 0");
  if (normalized_ && (x < 0.0 || xp < 0.0))
    throw std::domain_error("LaplaceCorrelation: normalized variant requires x, x' >= 0");
  auto base = [](int bi, int bj, double bx, double bxp) {
    // d1^i d2^j of 1/(x+x') = (-1)^{i+j} (i+j)! / (x+x')^{i+j+1}
    const int n = bi + bj;
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * factorial_d(n) / std::pow(bx + bxp, n + 1);
  };
  if (!normalized_) return base(i, j, x, xp);
  double total = 0.0;
  for (int p = 0; p <= i; ++p)
    for (int q = 0; q <= j; ++q)
      total += binom_d(i, p) * binom_d(j, q) * sqrt2x_deriv(p, x) * sqrt2x_deriv(q, xp) *
               base(i - p, j - q, x, xp);
  return total;
}

ContinuousEtaW::ContinuousEtaW(const LaplaceCorrelation& corr, double x_c, int n_spikes)
    : corr_(corr), x_c_(x_c), n_spikes_(n_spikes) {
  if (!(x_c > 0.0)) throw std::domain_error("ContinuousEtaW: requires x_c > 0");
  if (n_spikes < 1) throw std::invalid_argument("ContinuousEtaW: n_spikes must be >= 1");
  const int n = 2 * n_spikes;
  // Moment Gram (F*F)_{ij} = d1^i d2^j C(x_c, x_c); solved in long double
  // because the matrix is a severely ill-conditioned Hankel-type matrix.
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  LMat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = corr_.partial(i, j, x_c, x_c);
  {
    Eigen::JacobiSVD<Mat> svd(g.cast<double>());
    const auto& sv = svd.singularValues();
    condition_number_ =
        sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  }
  LVec delta = LVec::Zero(n);
  delta[0] = 1.0L;
  LVec alpha = Eigen::FullPivLU<LMat>(g).solve(delta);
  alpha_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) alpha_[static_cast<std::size_t>(k)] = static_cast<double>(alpha[k]);
}

double ContinuousEtaW::operator()(double x) const { return derivative(x, 0); }

double ContinuousEtaW::derivative(double x, int order) const {
  long double acc = 0.0L;
  for (int k = 0; k < 2 * n_spikes_; ++k)
    acc += static_cast<long double>(alpha_[static_cast<std::size_t>(k)]) *
           static_cast<long double>(corr_.partial(order, k, x, x_c_));
  return static_cast<double>(acc);
}

namespace {

std::vector<Vec> sweep_axes(const Box& domain, int grid_per_axis) {
  std::vector<Vec> axes;
  for (int j = 0; j < domain.dim(); ++j) {
    Vec g(grid_per_axis);
    for (int i = 0; i < grid_per_axis; ++i)
      g[i] = domain.upper()[j] * i / (grid_per_axis - 1);
    axes.push_back(std::move(g));
  }
  return axes;
}

bool excluded(const Vec& x, const std::vector<Vec>& spikes, const Vec& radii) {
  for (const auto& s : spikes) {
    double q = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double t = (x[j] - s[j]) / radii[j];
      q += t * t;
    }
    if (q <= 1.0) return true;
  }
  return false;
}

Mat fd_hessian(const std::function<double(const Vec&)>& eta, const Vec& x, double h) {
  const auto d = x.size();
  Mat hess(d, d);
  const double f0 = eta(x);
  for (Eigen::Index i = 0; i < d; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hess(i, i) = (eta(xp) - 2.0 * f0 + eta(xm)) / (h * h);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      Vec xpp = x, xpm = x, xmp = x, xmm = x;
      xpp[i] += h; xpp[j] += h;
      xpm[i] += h; xpm[j] -= h;
      xmp[i] -= h; xmp[j] += h;
      xmm[i] -= h; xmm[j] -= h;
      hess(i, j) = hess(j, i) = (eta(xpp) - eta(xpm) - eta(xmp) + eta(xmm)) / (4.0 * h * h);
    }
  }
  return hess;
}

}  // namespace

NondegeneracyReport check_nondegeneracy(
    const std::function<double(const Vec&)>& eta, const Box& domain,
    const std::vector<Vec>& spikes, int grid_per_axis, const NondegeneracyOptions& opt,
    const std::function<Vec(const std::vector<Vec>&)>& grid_eval) {
  if (grid_per_axis < 2) throw std::invalid_argument("check_nondegeneracy: grid too small");
  NondegeneracyReport report;
  report.options = opt;
  report.grid_per_axis = grid_per_axis;

  const int d = domain.dim();
  auto axes = sweep_axes(domain, grid_per_axis);
  Vec radii(d);
  for (int j = 0; j < d; ++j)
    radii[j] = opt.exclusion_steps * domain.upper()[j] / (grid_per_axis - 1);

  Eigen::Index total = 1;
  for (const auto& a : axes) total *= a.size();
  Vec values;
  if (grid_eval) values = grid_eval(axes);

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d), 0);
  Vec x(d);
  double best = -1.0;
  Vec best_x = Vec::Zero(d);
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    for (int j = 0; j < d; ++j) x[j] = axes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    if (!excluded(x, spikes, radii)) {
      const double v = std::abs(grid_eval ? values[flat] : eta(x));
      if (v > best) {
        best = v;
        best_x = x;
      }
    }
    for (int j = d - 1; j >= 0; --j) {
      auto& i = idx[static_cast<std::size_t>(j)];
      if (++i < axes[static_cast<std::size_t>(j)].size()) break;
      i = 0;
    }
  }
  report.max_abs_off_support = best;
  report.argmax_off_support = best_x;

  for (const auto& s : spikes)
    report.hessian_dets.push_back(fd_hessian(eta, s, opt.hessian_step).determinant());

  bool dets_ok = true;
  for (double det : report.hessian_dets)
    if (!(std::abs(det) > opt.det_floor)) dets_ok = false;
  report.nondegenerate = (best < 1.0) && dets_ok;
  return report;
}

NondegeneracyReport check_nondegeneracy(const Certificate& cert, const std::vector<Vec>& spikes,
                                        int grid_per_axis, const NondegeneracyOptions& opt) {
  auto eval = [&cert](const Vec& x) { return cert(x); };
  auto grid = [&cert](const std::vector<Vec>& axes) { return cert.on_grid(axes); };
  auto report =
      check_nondegeneracy(eval, cert.kernel().domain(), spikes, grid_per_axis, opt, grid);
  if (cert.kind() == CertificateKind::EtaW && cert.eta_w_spikes() > 0 && !spikes.empty()) {
    report.eta_deriv_2n = cert.derivative(spikes.front()[0], 2 * cert.eta_w_spikes());
    report.nondegenerate =
        report.nondegenerate && std::abs(*report.eta_deriv_2n) > opt.det_floor;
  }
  return report;
}

NondegeneracyReport check_nondegeneracy(const ContinuousEtaW& eta, const Box& domain,
                                        int grid_per_axis, const NondegeneracyOptions& opt) {
  if (domain.dim() != 1)
    throw std::invalid_argument("check_nondegeneracy: continuous eta_W is 1-D");
  auto eval = [&eta](const Vec& x) { return eta(x[0]); };
  std::vector<Vec> spikes = {point1d(eta.x_c())};
  auto report = check_nondegeneracy(eval, domain, spikes, grid_per_axis, opt);
  report.eta_deriv_2n = eta.derivative(eta.x_c(), 2 * eta.n_spikes());
  report.nondegenerate = report.nondegenerate && std::abs(*report.eta_deriv_2n) > opt.det_floor;
  return report;
}

}  // namespace sfw

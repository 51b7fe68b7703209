#include "sfw/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sfw {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

double gauss_pdf(double t, double sigma) {
  return std::exp(-t * t / (2.0 * sigma * sigma)) / (sigma * kSqrt2Pi);
}

/// Integrals of the unit-mass Gaussian centered at c over the n equal pixels
/// tiling [0,b]:  A_i = 1/2 [erf((e_{i+1}-c)/(s*sqrt2)) - erf((e_i-c)/(s*sqrt2))].
void pixel_factors(double b, int n, double c, double sigma, Vec& out) {
  const double h = b / n;
  const double inv = 1.0 / (sigma * kSqrt2);
  double prev = std::erf((0.0 - c) * inv);
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    double next = std::erf(((i + 1) * h - c) * inv);
    out[i] = 0.5 * (next - prev);
    prev = next;
  }
}

/// d A_i / dc.
void pixel_factors_dc(double b, int n, double c, double sigma, Vec& out) {
  const double h = b / n;
  double prev = gauss_pdf(0.0 - c, sigma);
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    double next = gauss_pdf((i + 1) * h - c, sigma);
    out[i] = prev - next;
    prev = next;
  }
}

/// d A_i / dsigma.
void pixel_factors_dsigma(double b, int n, double c, double sigma, Vec& out) {
  const double h = b / n;
  double t = 0.0 - c;
  double prev = t * gauss_pdf(t, sigma);
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    t = (i + 1) * h - c;
    double next = t * gauss_pdf(t, sigma);
    out[i] = (prev - next) / sigma;
    prev = next;
  }
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
plane_view(const Vec& p, int k, int n1, int n2) {
  return {p.data() + static_cast<std::ptrdiff_t>(k) * n1 * n2, n1, n2};
}

// ---------------------------------------------------------------------------
// Gaussian1D

class Gaussian1DKernel final : public Kernel {
 public:
  explicit Gaussian1DKernel(KernelSpec spec)
      : Kernel(std::move(spec)), sigma_(spec_.sigma) {
    centers_.resize(spec_.detector_samples);
    for (int i = 0; i < spec_.detector_samples; ++i)
      centers_[i] = static_cast<double>(i) / (spec_.detector_samples - 1) * spec_.box[0];
  }

  std::vector<int> default_grid() const override {
    return {64 * static_cast<int>(std::ceil(spec_.box[0] / sigma_))};
  }

  Mat derivative_stack(double x, int order) const override {
    const int m = obs_dim_;
    Mat out(m, order + 1);
    const double scale = 1.0 / (sigma_ * kSqrt2);
    for (int i = 0; i < m; ++i) {
      const double t = centers_[i] - x;
      const double g = gauss_pdf(t, sigma_);
      const double tau = t * scale;
      // phi^{(j)}(x) = g * H_j(tau) * scale^j with Hermite recurrence.
      double h_prev = 0.0, h = 1.0, pw = 1.0;
      for (int j = 0; j <= order; ++j) {
        out(i, j) = g * h * pw;
        double h_next = 2.0 * tau * h - 2.0 * j * h_prev;
        h_prev = h;
        h = h_next;
        pw *= scale;
      }
    }
    return out;
  }

 protected:
  void do_phi(const Vec& x, Vec& out) const override {
    out.resize(obs_dim_);
    for (int i = 0; i < obs_dim_; ++i) out[i] = gauss_pdf(centers_[i] - x[0], sigma_);
  }

  void do_grad_phi(const Vec& x, Mat& out) const override {
    out.resize(obs_dim_, 1);
    const double s2 = sigma_ * sigma_;
    for (int i = 0; i < obs_dim_; ++i) {
      const double t = centers_[i] - x[0];
      out(i, 0) = gauss_pdf(t, sigma_) * t / s2;
    }
  }

 private:
  double sigma_;
  Vec centers_;
};

// ---------------------------------------------------------------------------
// Discretized Laplace (optionally L2-normalized)

class DiscreteLaplaceKernel final : public Kernel {
 public:
  explicit DiscreteLaplaceKernel(KernelSpec spec)
      : Kernel(std::move(spec)),
        s_(spec_.laplace_s),
        normalized_(spec_.variant == KernelVariant::LaplaceNormalized) {}

  std::vector<int> default_grid() const override { return {512}; }

  double correlation(const Vec& x, const Vec& xp) const override {
    require_in_domain(x);
    require_in_domain(xp);
    double sum = 0.0;
    for (Eigen::Index k = 0; k < s_.size(); ++k) sum += std::exp(-s_[k] * (x[0] + xp[0]));
    return normalized_ ? xi(x[0]) * xi(xp[0]) * sum : sum;
  }

  Mat derivative_stack(double x, int order) const override {
    const auto m = s_.size();
    Mat out(m, order + 1);
    if (!normalized_) {
      for (Eigen::Index k = 0; k < m; ++k) {
        double e = std::exp(-s_[k] * x);
        double pw = 1.0;
        for (int j = 0; j <= order; ++j) {
          out(k, j) = pw * e;
          pw *= -s_[k];
        }
      }
      return out;
    }
    // Normalized case: phi_k = xi * e_k with xi = S^{-1/2}, S = sum e^{-2 s x}.
    // Derivatives of xi follow from differentiating xi^2 S = 1.
    std::vector<double> sd(static_cast<std::size_t>(order) + 1);  // S^{(j)}
    for (int j = 0; j <= order; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < m; ++k)
        acc += std::pow(-2.0 * s_[k], j) * std::exp(-2.0 * s_[k] * x);
      sd[static_cast<std::size_t>(j)] = acc;
    }
    std::vector<double> u(static_cast<std::size_t>(order) + 1);  // (xi^2)^{(j)}
    u[0] = 1.0 / sd[0];
    for (int j = 1; j <= order; ++j) {
      double acc = 0.0;
      for (int i = 1; i <= j; ++i)
        acc += binom(j, i) * u[static_cast<std::size_t>(j - i)] * sd[static_cast<std::size_t>(i)];
      u[static_cast<std::size_t>(j)] = -acc / sd[0];
    }
    std::vector<double> xd(static_cast<std::size_t>(order) + 1);  // xi^{(j)}
    xd[0] = std::sqrt(u[0]);
    for (int j = 1; j <= order; ++j) {
      double acc = 0.0;
      for (int l = 1; l < j; ++l)
        acc += binom(j, l) * xd[static_cast<std::size_t>(l)] * xd[static_cast<std::size_t>(j - l)];
      xd[static_cast<std::size_t>(j)] = (u[static_cast<std::size_t>(j)] - acc) / (2.0 * xd[0]);
    }
    for (Eigen::Index k = 0; k < m; ++k) {
      // (xi e_k)^{(j)} = sum_l C(j,l) xi^{(j-l)} (-s_k)^l e_k
      const double e = std::exp(-s_[k] * x);
      for (int j = 0; j <= order; ++j) {
        double acc = 0.0;
        double pw = 1.0;
        for (int l = 0; l <= j; ++l) {
          acc += binom(j, l) * xd[static_cast<std::size_t>(j - l)] * pw;
          pw *= -s_[k];
        }
        out(k, j) = acc * e;
      }
    }
    return out;
  }

 protected:
  void do_phi(const Vec& x, Vec& out) const override {
    out.resize(s_.size());
    for (Eigen::Index k = 0; k < s_.size(); ++k) out[k] = std::exp(-s_[k] * x[0]);
    if (normalized_) out *= xi(x[0]);
  }

  void do_grad_phi(const Vec& x, Mat& out) const override {
    out.resize(s_.size(), 1);
    if (!normalized_) {
      for (Eigen::Index k = 0; k < s_.size(); ++k)
        out(k, 0) = -s_[k] * std::exp(-s_[k] * x[0]);
      return;
    }
    const double xv = xi(x[0]);
    const double dxv = dxi(x[0]);
    for (Eigen::Index k = 0; k < s_.size(); ++k)
      out(k, 0) = (dxv - s_[k] * xv) * std::exp(-s_[k] * x[0]);
  }

 private:
  static double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  }
  double xi(double x) const {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < s_.size(); ++k) sum += std::exp(-2.0 * s_[k] * x);
    return 1.0 / std::sqrt(sum);
  }
  double dxi(double x) const {
    double sum = 0.0, dsum = 0.0;
    for (Eigen::Index k = 0; k < s_.size(); ++k) {
      double e = std::exp(-2.0 * s_[k] * x);
      sum += e;
      dsum += s_[k] * e;
    }
    return dsum / (sum * std::sqrt(sum));
  }

  Vec s_;
  bool normalized_;
};

// ---------------------------------------------------------------------------
// Shared base for the pixel-integrating 3-D kernels.
// Observation layout: index (k*N1 + i1)*N2 + i2.

class Microscopy3DKernel : public Kernel {
 public:
  std::vector<int> default_grid() const override { return {spec_.n1, spec_.n2, 32}; }

 protected:
  explicit Microscopy3DKernel(KernelSpec spec) : Kernel(std::move(spec)) {}

  int n1() const { return spec_.n1; }
  int n2() const { return spec_.n2; }
  int planes() const { return spec_.planes; }
  double b1() const { return spec_.box[0]; }
  double b2() const { return spec_.box[1]; }
};

// ---------------------------------------------------------------------------
// Astigmatism

class AstigmatismKernel final : public Microscopy3DKernel {
 public:
  explicit AstigmatismKernel(KernelSpec spec) : Microscopy3DKernel(std::move(spec)) {
    zk_.resize(planes());
    for (int k = 0; k < planes(); ++k)
      zk_[k] = (k + 1) * spec_.box[2] / (planes() + 1);
  }

  Vec adjoint_on_grid(const Vec& p, const std::vector<Vec>& axes) const override {
    check_axes(axes);
    const auto& g1 = axes[0];
    const auto& g2 = axes[1];
    const auto& g3 = axes[2];
    Vec out = Vec::Zero(g1.size() * g2.size() * g3.size());
    Mat fx(g1.size(), n1()), fy(g2.size(), n2());
    Vec row;
    for (Eigen::Index v = 0; v < g3.size(); ++v) {
      Mat slice = Mat::Zero(g1.size(), g2.size());
      for (int k = 0; k < planes(); ++k) {
        auto [s1, s2] = sigmas(g3[v] - zk_[k]);
        for (Eigen::Index i = 0; i < g1.size(); ++i) {
          pixel_factors(b1(), n1(), g1[i], s1, row);
          fx.row(i) = row.transpose();
        }
        for (Eigen::Index i = 0; i < g2.size(); ++i) {
          pixel_factors(b2(), n2(), g2[i], s2, row);
          fy.row(i) = row.transpose();
        }
        slice.noalias() += fx * plane_view(p, k, n1(), n2()) * fy.transpose();
      }
      for (Eigen::Index i = 0; i < g1.size(); ++i)
        for (Eigen::Index j = 0; j < g2.size(); ++j)
          out[(i * g2.size() + j) * g3.size() + v] = slice(i, j);
    }
    return out;
  }

  std::pair<double, double> sigmas(double z) const {
    return {sigma1(z), sigma1(-z)};
  }

 protected:
  void do_phi(const Vec& x, Vec& out) const override {
    out.resize(obs_dim_);
    Vec ax, ay;
    for (int k = 0; k < planes(); ++k) {
      auto [s1, s2] = sigmas(x[2] - zk_[k]);
      pixel_factors(b1(), n1(), x[0], s1, ax);
      pixel_factors(b2(), n2(), x[1], s2, ay);
      write_plane(out, k, ax, ay);
    }
  }

  void do_grad_phi(const Vec& x, Mat& out) const override {
    out.resize(obs_dim_, 3);
    Vec ax, ay, dax, day, ax_ds, ay_ds;
    for (int k = 0; k < planes(); ++k) {
      const double z = x[2] - zk_[k];
      auto [s1, s2] = sigmas(z);
      pixel_factors(b1(), n1(), x[0], s1, ax);
      pixel_factors(b2(), n2(), x[1], s2, ay);
      pixel_factors_dc(b1(), n1(), x[0], s1, dax);
      pixel_factors_dc(b2(), n2(), x[1], s2, day);
      pixel_factors_dsigma(b1(), n1(), x[0], s1, ax_ds);
      pixel_factors_dsigma(b2(), n2(), x[1], s2, ay_ds);
      const double ds1 = dsigma1(z);
      const double ds2 = -dsigma1(-z);
      const int base = k * n1() * n2();
      for (int i = 0; i < n1(); ++i)
        for (int j = 0; j < n2(); ++j) {
          const int idx = base + i * n2() + j;
          out(idx, 0) = dax[i] * ay[j];
          out(idx, 1) = ax[i] * day[j];
          out(idx, 2) = ds1 * ax_ds[i] * ay[j] + ds2 * ax[i] * ay_ds[j];
        }
    }
  }

 private:
  double sigma1(double z) const {
    const double t = (spec_.astig_alpha * z - spec_.astig_beta) / spec_.astig_d;
    return spec_.astig_sigma0 * std::sqrt(1.0 + t * t);
  }
  double dsigma1(double z) const {
    const double s0 = spec_.astig_sigma0;
    const double t = spec_.astig_alpha * z - spec_.astig_beta;
    return s0 * s0 * spec_.astig_alpha * t / (spec_.astig_d * spec_.astig_d * sigma1(z));
  }
  void write_plane(Vec& out, int k, const Vec& ax, const Vec& ay) const {
    const int base = k * n1() * n2();
    for (int i = 0; i < n1(); ++i)
      for (int j = 0; j < n2(); ++j) out[base + i * n2() + j] = ax[i] * ay[j];
  }
  void check_axes(const std::vector<Vec>& axes) const {
    if (axes.size() != 3) throw std::invalid_argument("adjoint_on_grid: expected 3 axes");
  }

  Vec zk_;
};

// ---------------------------------------------------------------------------
// Double helix

class DoubleHelixKernel final : public Microscopy3DKernel {
 public:
  explicit DoubleHelixKernel(KernelSpec spec) : Microscopy3DKernel(std::move(spec)) {
    zk_.resize(planes());
    for (int k = 0; k < planes(); ++k)
      zk_[k] = (k + 1) * spec_.box[2] / (planes() + 1);
  }

  Vec adjoint_on_grid(const Vec& p, const std::vector<Vec>& axes) const override {
    if (axes.size() != 3) throw std::invalid_argument("adjoint_on_grid: expected 3 axes");
    const auto& g1 = axes[0];
    const auto& g2 = axes[1];
    const auto& g3 = axes[2];
    const double sg = spec_.psf_sigma;
    Vec out = Vec::Zero(g1.size() * g2.size() * g3.size());
    Mat fx(g1.size(), n1()), fy(g2.size(), n2());
    Vec row;
    for (Eigen::Index v = 0; v < g3.size(); ++v) {
      Mat slice = Mat::Zero(g1.size(), g2.size());
      for (int k = 0; k < planes(); ++k) {
        auto [r1, r2] = offsets(g3[v] - zk_[k]);
        for (double u : {-1.0, 1.0}) {
          for (Eigen::Index i = 0; i < g1.size(); ++i) {
            pixel_factors(b1(), n1(), g1[i] + u * r1, sg, row);
            fx.row(i) = row.transpose();
          }
          for (Eigen::Index i = 0; i < g2.size(); ++i) {
            pixel_factors(b2(), n2(), g2[i] + u * r2, sg, row);
            fy.row(i) = row.transpose();
          }
          slice.noalias() += fx * plane_view(p, k, n1(), n2()) * fy.transpose();
        }
      }
      for (Eigen::Index i = 0; i < g1.size(); ++i)
        for (Eigen::Index j = 0; j < g2.size(); ++j)
          out[(i * g2.size() + j) * g3.size() + v] = slice(i, j);
    }
    return out;
  }

  std::pair<double, double> offsets(double z) const {
    const double theta = spec_.helix_theta_speed * z;
    return {0.5 * spec_.helix_omega * std::cos(theta), -0.5 * spec_.helix_omega * std::sin(theta)};
  }

 protected:
  void do_phi(const Vec& x, Vec& out) const override {
    out.setZero(obs_dim_);
    const double sg = spec_.psf_sigma;
    Vec ax, ay;
    for (int k = 0; k < planes(); ++k) {
      auto [r1, r2] = offsets(x[2] - zk_[k]);
      const int base = k * n1() * n2();
      for (double u : {-1.0, 1.0}) {
        pixel_factors(b1(), n1(), x[0] + u * r1, sg, ax);
        pixel_factors(b2(), n2(), x[1] + u * r2, sg, ay);
        for (int i = 0; i < n1(); ++i)
          for (int j = 0; j < n2(); ++j) out[base + i * n2() + j] += ax[i] * ay[j];
      }
    }
  }

  void do_grad_phi(const Vec& x, Mat& out) const override {
    out.setZero(obs_dim_, 3);
    const double sg = spec_.psf_sigma;
    const double w = 0.5 * spec_.helix_omega;
    const double ts = spec_.helix_theta_speed;
    Vec ax, ay, dax, day;
    for (int k = 0; k < planes(); ++k) {
      const double z = x[2] - zk_[k];
      auto [r1, r2] = offsets(z);
      const double dr1 = -w * ts * std::sin(ts * z);
      const double dr2 = -w * ts * std::cos(ts * z);
      const int base = k * n1() * n2();
      for (double u : {-1.0, 1.0}) {
        pixel_factors(b1(), n1(), x[0] + u * r1, sg, ax);
        pixel_factors(b2(), n2(), x[1] + u * r2, sg, ay);
        pixel_factors_dc(b1(), n1(), x[0] + u * r1, sg, dax);
        pixel_factors_dc(b2(), n2(), x[1] + u * r2, sg, day);
        for (int i = 0; i < n1(); ++i)
          for (int j = 0; j < n2(); ++j) {
            const int idx = base + i * n2() + j;
            out(idx, 0) += dax[i] * ay[j];
            out(idx, 1) += ax[i] * day[j];
            out(idx, 2) += u * (dr1 * dax[i] * ay[j] + dr2 * ax[i] * day[j]);
          }
      }
    }
  }

 private:
  Vec zk_;
};

// ---------------------------------------------------------------------------
// MA-TIRF

class MaTirfKernel final : public Microscopy3DKernel {
 public:
  explicit MaTirfKernel(KernelSpec spec) : Microscopy3DKernel(std::move(spec)) {
    s_ = tirf_angles_and_depths(spec_).depths;
  }

  Vec adjoint_on_grid(const Vec& p, const std::vector<Vec>& axes) const override {
    if (axes.size() != 3) throw std::invalid_argument("adjoint_on_grid: expected 3 axes");
    const auto& g1 = axes[0];
    const auto& g2 = axes[1];
    const auto& g3 = axes[2];
    const double sg = spec_.psf_sigma;
    Mat fx(g1.size(), n1()), fy(g2.size(), n2());
    Vec row;
    for (Eigen::Index i = 0; i < g1.size(); ++i) {
      pixel_factors(b1(), n1(), g1[i], sg, row);
      fx.row(i) = row.transpose();
    }
    for (Eigen::Index i = 0; i < g2.size(); ++i) {
      pixel_factors(b2(), n2(), g2[i], sg, row);
      fy.row(i) = row.transpose();
    }
    std::vector<Mat> lateral(static_cast<std::size_t>(planes()));
    for (int k = 0; k < planes(); ++k)
      lateral[static_cast<std::size_t>(k)] = fx * plane_view(p, k, n1(), n2()) * fy.transpose();
    Vec out(g1.size() * g2.size() * g3.size());
    Vec wz(planes());
    for (Eigen::Index v = 0; v < g3.size(); ++v) {
      axial_weights(g3[v], wz);
      for (Eigen::Index i = 0; i < g1.size(); ++i)
        for (Eigen::Index j = 0; j < g2.size(); ++j) {
          double acc = 0.0;
          for (int k = 0; k < planes(); ++k) acc += wz[k] * lateral[static_cast<std::size_t>(k)](i, j);
          out[(i * g2.size() + j) * g3.size() + v] = acc;
        }
    }
    return out;
  }

  const Vec& depths() const { return s_; }

 protected:
  void do_phi(const Vec& x, Vec& out) const override {
    out.resize(obs_dim_);
    const double sg = spec_.psf_sigma;
    Vec ax, ay, wz(planes());
    pixel_factors(b1(), n1(), x[0], sg, ax);
    pixel_factors(b2(), n2(), x[1], sg, ay);
    axial_weights(x[2], wz);
    for (int k = 0; k < planes(); ++k) {
      const int base = k * n1() * n2();
      for (int i = 0; i < n1(); ++i)
        for (int j = 0; j < n2(); ++j) out[base + i * n2() + j] = wz[k] * ax[i] * ay[j];
    }
  }

  void do_grad_phi(const Vec& x, Mat& out) const override {
    out.resize(obs_dim_, 3);
    const double sg = spec_.psf_sigma;
    Vec ax, ay, dax, day, wz(planes()), dwz(planes());
    pixel_factors(b1(), n1(), x[0], sg, ax);
    pixel_factors(b2(), n2(), x[1], sg, ay);
    pixel_factors_dc(b1(), n1(), x[0], sg, dax);
    pixel_factors_dc(b2(), n2(), x[1], sg, day);
    axial_weights(x[2], wz, &dwz);
    for (int k = 0; k < planes(); ++k) {
      const int base = k * n1() * n2();
      for (int i = 0; i < n1(); ++i)
        for (int j = 0; j < n2(); ++j) {
          const int idx = base + i * n2() + j;
          out(idx, 0) = wz[k] * dax[i] * ay[j];
          out(idx, 1) = wz[k] * ax[i] * day[j];
          out(idx, 2) = dwz[k] * ax[i] * ay[j];
        }
    }
  }

 private:
  /// w_k(z) = xi(z) e^{-s_k z} with xi(z) = (sum_j e^{-2 s_j z})^{-1/2}.
  void axial_weights(double z, Vec& w, Vec* dw = nullptr) const {
    double S = 0.0, dS = 0.0;
    for (int k = 0; k < planes(); ++k) {
      const double e = std::exp(-2.0 * s_[k] * z);
      S += e;
      dS += s_[k] * e;
    }
    const double xi = 1.0 / std::sqrt(S);
    const double dxi = dS * xi / S;  // xi' = xi^3 * sum s_j e^{-2 s_j z}
    for (int k = 0; k < planes(); ++k) {
      const double e = std::exp(-s_[k] * z);
      w[k] = xi * e;
      if (dw) (*dw)[k] = (dxi - s_[k] * xi) * e;
    }
  }

  Vec s_;
};

}  // namespace

// ---------------------------------------------------------------------------
// KernelSpec

const char* to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::Gaussian1D: return "gaussian1d";
    case KernelVariant::LaplaceUnnormalized: return "laplace";
    case KernelVariant::LaplaceNormalized: return "laplace_normalized";
    case KernelVariant::Astigmatism: return "astigmatism";
    case KernelVariant::DoubleHelix: return "double_helix";
    case KernelVariant::MaTirf: return "matirf";
  }
  return "unknown";
}

KernelVariant kernel_variant_from_string(const std::string& name) {
  if (name == "gaussian1d") return KernelVariant::Gaussian1D;
  if (name == "laplace") return KernelVariant::LaplaceUnnormalized;
  if (name == "laplace_normalized") return KernelVariant::LaplaceNormalized;
  if (name == "astigmatism") return KernelVariant::Astigmatism;
  if (name == "double_helix") return KernelVariant::DoubleHelix;
  if (name == "matirf") return KernelVariant::MaTirf;
  throw std::invalid_argument("unknown kernel variant: " + name);
}

int KernelSpec::obs_dim() const {
  switch (variant) {
    case KernelVariant::Gaussian1D: return detector_samples;
    case KernelVariant::LaplaceUnnormalized:
    case KernelVariant::LaplaceNormalized: return static_cast<int>(laplace_s.size());
    default: return n1 * n2 * planes;
  }
}

void KernelSpec::validate() const {
  const bool is_1d = variant == KernelVariant::Gaussian1D ||
                     variant == KernelVariant::LaplaceUnnormalized ||
                     variant == KernelVariant::LaplaceNormalized;
  if (is_1d && box.size() != 1)
    throw std::invalid_argument("KernelSpec: 1-D variant needs a 1-D box");
  if (!is_1d && box.size() != 3)
    throw std::invalid_argument("KernelSpec: microscopy variant needs a 3-D box");
  for (Eigen::Index j = 0; j < box.size(); ++j)
    if (!(box[j] > 0.0)) throw std::invalid_argument("KernelSpec: box bounds must be positive");
  switch (variant) {
    case KernelVariant::Gaussian1D:
      if (!(sigma > 0.0)) throw std::invalid_argument("KernelSpec: sigma must be positive");
      if (detector_samples < 2)
        throw std::invalid_argument("KernelSpec: need at least two detector samples");
      break;
    case KernelVariant::LaplaceUnnormalized:
    case KernelVariant::LaplaceNormalized:
      if (laplace_s.size() == 0)
        throw std::invalid_argument("KernelSpec: laplace_s must be nonempty");
      for (Eigen::Index k = 0; k < laplace_s.size(); ++k) {
        if (laplace_s[k] < 0.0)
          throw std::invalid_argument("KernelSpec: laplace_s must be >= 0");
        if (k > 0 && laplace_s[k] <= laplace_s[k - 1])
          throw std::invalid_argument("KernelSpec: laplace_s must be strictly increasing");
      }
      break;
    default:
      if (n1 < 1 || n2 < 1 || planes < 1)
        throw std::invalid_argument("KernelSpec: detector grid and plane count must be positive");
      if (!(psf_sigma > 0.0) || !(astig_sigma0 > 0.0))
        throw std::invalid_argument("KernelSpec: PSF sigma must be positive");
      if (variant == KernelVariant::DoubleHelix && !(helix_omega > 0.0))
        throw std::invalid_argument("KernelSpec: helix_omega must be positive");
      if (variant == KernelVariant::MaTirf) {
        if (!(n_i > 0.0) || !(n_t > 0.0) || n_t >= n_i)
          throw std::invalid_argument("KernelSpec: requires n_i > n_t > 0");
        if (na > n_i) throw std::invalid_argument("KernelSpec: requires NA <= n_i");
        if (!(lambda_exc > 0.0))
          throw std::invalid_argument("KernelSpec: lambda_exc must be positive");
      }
      break;
  }
}

KernelSpec KernelSpec::gaussian1d(double sigma, int samples, double b) {
  KernelSpec s;
  s.variant = KernelVariant::Gaussian1D;
  s.box = point1d(b);
  s.sigma = sigma;
  s.detector_samples = samples;
  return s;
}

KernelSpec KernelSpec::laplace(Vec samples, bool normalized, double b) {
  KernelSpec s;
  s.variant = normalized ? KernelVariant::LaplaceNormalized : KernelVariant::LaplaceUnnormalized;
  s.box = point1d(b);
  s.laplace_s = std::move(samples);
  return s;
}

namespace {
KernelSpec microscopy_spec(KernelVariant v, int planes) {
  KernelSpec s;
  s.variant = v;
  s.box = point3d(6.4, 6.4, 0.8);
  s.planes = planes;
  return s;
}
}  // namespace

KernelSpec KernelSpec::astigmatism(int planes) {
  return microscopy_spec(KernelVariant::Astigmatism, planes);
}
KernelSpec KernelSpec::double_helix(int planes) {
  return microscopy_spec(KernelVariant::DoubleHelix, planes);
}
KernelSpec KernelSpec::ma_tirf(int planes) {
  return microscopy_spec(KernelVariant::MaTirf, planes);
}

Vec uniform_laplace_samples(int count, double scale) {
  if (count < 1) throw std::invalid_argument("uniform_laplace_samples: count must be >= 1");
  Vec s(count);
  const double step = scale / std::sqrt(static_cast<double>(count));
  for (int k = 0; k < count; ++k) s[k] = k * step;
  return s;
}

// ---------------------------------------------------------------------------
// Kernel

void Kernel::require_in_domain(const Vec& x) const {
  const double tol = 1e-9 * (1.0 + domain_.upper().maxCoeff());
  if (!domain_.contains(x, tol))
    throw std::domain_error("kernel evaluation outside the domain box");
}

Vec Kernel::phi(const Vec& x) const {
  require_in_domain(x);
  Vec out;
  do_phi(x, out);
  return out;
}

Mat Kernel::grad_phi(const Vec& x) const {
  require_in_domain(x);
  Mat out;
  do_grad_phi(x, out);
  return out;
}

double Kernel::correlation(const Vec& x, const Vec& xp) const {
  return phi(x).dot(phi(xp));
}

Mat Kernel::derivative_stack(double, int) const {
  throw std::logic_error("derivative_stack: only available for 1-D kernel variants");
}

Vec Kernel::adjoint_on_grid(const Vec& p, const std::vector<Vec>& axes) const {
  if (static_cast<int>(axes.size()) != dim())
    throw std::invalid_argument("adjoint_on_grid: axis count must match the domain dimension");
  if (dim() == 1) {
    Vec out(axes[0].size());
    for (Eigen::Index i = 0; i < axes[0].size(); ++i)
      out[i] = phi(point1d(axes[0][i])).dot(p);
    return out;
  }
  // Generic tensor loop.
  Eigen::Index total = 1;
  for (const auto& a : axes) total *= a.size();
  Vec out(total);
  std::vector<Eigen::Index> idx(axes.size(), 0);
  Vec x(dim());
  for (Eigen::Index flat = 0; flat < total; ++flat) {
    for (int j = 0; j < dim(); ++j) x[j] = axes[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    out[flat] = phi(x).dot(p);
    for (int j = dim() - 1; j >= 0; --j) {
      if (++idx[static_cast<std::size_t>(j)] < axes[static_cast<std::size_t>(j)].size()) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

std::shared_ptr<const Kernel> make_kernel(const KernelSpec& spec) {
  spec.validate();
  switch (spec.variant) {
    case KernelVariant::Gaussian1D: return std::make_shared<Gaussian1DKernel>(spec);
    case KernelVariant::LaplaceUnnormalized:
    case KernelVariant::LaplaceNormalized: return std::make_shared<DiscreteLaplaceKernel>(spec);
    case KernelVariant::Astigmatism: return std::make_shared<AstigmatismKernel>(spec);
    case KernelVariant::DoubleHelix: return std::make_shared<DoubleHelixKernel>(spec);
    case KernelVariant::MaTirf: return std::make_shared<MaTirfKernel>(spec);
  }
  throw std::logic_error("make_kernel: unhandled variant");
}

Vec apply_forward(const Kernel& k, const DiscreteMeasure& m) {
  Vec y = Vec::Zero(k.obs_dim());
  for (const auto& s : m.spikes()) y += s.amplitude * k.phi(s.position);
  return y;
}

double apply_adjoint(const Kernel& k, const Vec& p, const Vec& x) {
  if (p.size() != k.obs_dim())
    throw std::invalid_argument("apply_adjoint: coefficient size does not match obs dim");
  return k.phi(x).dot(p);
}

Mat AtomMatrix::joint() const {
  if (dphi.size() == 0) return phi;
  Mat g(phi.rows(), phi.cols() + dphi.cols());
  g << phi, dphi;
  return g;
}

AtomMatrix atom_matrices(const Kernel& k, const std::vector<Vec>& positions,
                         bool with_derivatives) {
  const int n = static_cast<int>(positions.size());
  const int d = k.dim();
  AtomMatrix out;
  out.phi.resize(k.obs_dim(), n);
  if (with_derivatives) out.dphi.resize(k.obs_dim(), n * d);
  for (int i = 0; i < n; ++i) {
    out.phi.col(i) = k.phi(positions[static_cast<std::size_t>(i)]);
    if (with_derivatives) {
      Mat g = k.grad_phi(positions[static_cast<std::size_t>(i)]);
      for (int j = 0; j < d; ++j) out.dphi.col(j * n + i) = g.col(j);
    }
    for (int j = 0; j < i; ++j)
      if (positions[static_cast<std::size_t>(i)] == positions[static_cast<std::size_t>(j)])
        out.duplicate_positions = true;
  }
  return out;
}

TirfGeometry tirf_angles_and_depths(const KernelSpec& spec) {
  if (!(spec.n_i > 0.0) || !(spec.n_t > 0.0) || spec.n_t >= spec.n_i)
    throw std::invalid_argument("tirf_angles_and_depths: requires n_i > n_t > 0");
  if (spec.na > spec.n_i)
    throw std::invalid_argument("tirf_angles_and_depths: requires NA <= n_i");
  const int k = spec.planes;
  const double a_c = std::asin(spec.n_t / spec.n_i);
  const double a_max = std::asin(spec.na / spec.n_i);
  TirfGeometry geo;
  geo.angles_deg.resize(k);
  geo.depths.resize(k);
  const double sin2c = std::sin(a_c) * std::sin(a_c);
  const double coef = 4.0 * M_PI * spec.n_i / spec.lambda_exc;
  for (int i = 0; i < k; ++i) {
    const double a = (k == 1) ? a_c : a_c + (a_max - a_c) * i / (k - 1);
    geo.angles_deg[i] = a * 180.0 / M_PI;
    double term = std::sin(a) * std::sin(a) - sin2c;
    if (term < 0.0) term = 0.0;
    geo.depths[i] = coef * (spec.tirf_sqrt_depth ? std::sqrt(term) : term);
  }
  return geo;
}

std::pair<double, double> astig_sigmas(const KernelSpec& spec, double z) {
  if (spec.variant != KernelVariant::Astigmatism)
    throw std::invalid_argument("astig_sigmas: spec is not the astigmatism variant");
  auto s1 = [&](double zz) {
    const double t = (spec.astig_alpha * zz - spec.astig_beta) / spec.astig_d;
    return spec.astig_sigma0 * std::sqrt(1.0 + t * t);
  };
  return {s1(z), s1(-z)};
}

std::pair<double, double> helix_offsets(const KernelSpec& spec, double z) {
  if (spec.variant != KernelVariant::DoubleHelix)
    throw std::invalid_argument("helix_offsets: spec is not the double-helix variant");
  const double theta = spec.helix_theta_speed * z;
  return {0.5 * spec.helix_omega * std::cos(theta), -0.5 * spec.helix_omega * std::sin(theta)};
}

}  // namespace sfw

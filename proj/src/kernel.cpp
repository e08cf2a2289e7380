#include "graphdiff/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace graphdiff {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b,
                    double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

double param(const KernelParams& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void reject_unknown(const KernelParams& p, std::initializer_list<const char*> known,
                    const std::string& name) {
  for (const auto& [key, value] : p) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("kernel '" + name + "': unknown parameter '" + key + "'");
  }
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  // Coarse magnitude estimate turns the relative tolerance into an absolute one.
  double scale = 0.0;
  constexpr int kProbe = 64;
  for (int i = 0; i <= kProbe; ++i) scale += std::abs(f(a + (b - a) * i / kProbe));
  scale *= std::abs(b - a) / (kProbe + 1);
  const double abs_tol = tol * (scale > 0.0 ? scale : 1.0);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, abs_tol, 50);
}

Kernel::Kernel(std::string name, std::function<double(double)> profile, double support_radius)
    : name_(std::move(name)), profile_(std::move(profile)), support_(support_radius) {
  if (!(support_ > 0.0) || !std::isfinite(support_)) {
    throw std::invalid_argument("kernel '" + name_ + "': support radius must be positive and finite");
  }
  // J is even; integrate the half line and double. Splitting at 0 avoids the kink.
  l1_ = 2.0 * adaptive_simpson([this](double z) { return std::abs(profile_(z)); }, 0.0, support_);
  a_ = adaptive_simpson([this](double z) { return z * z * profile_(z); }, 0.0, support_);
  check_admissible();
}

Kernel::Kernel(std::string name, std::function<double(double)> profile, double support_radius,
               double l1_norm, double second_moment_half)
    : name_(std::move(name)), profile_(std::move(profile)), support_(support_radius),
      l1_(l1_norm), a_(second_moment_half) {
  if (!(support_ > 0.0) || !std::isfinite(support_)) {
    throw std::invalid_argument("kernel '" + name_ + "': support radius must be positive and finite");
  }
  check_admissible();
}

void Kernel::check_admissible() const {
  if (!(l1_ > 0.0) || !std::isfinite(l1_) || !(a_ > 0.0) || !std::isfinite(a_)) {
    throw std::invalid_argument("kernel '" + name_ + "': moments must be finite and positive");
  }
  if (!(profile_(0.0) > 0.0)) {
    throw std::invalid_argument("kernel '" + name_ + "': J(0) must be positive");
  }
  constexpr int kSamples = 512;
  double prev = profile_(0.0);
  for (int i = 1; i <= kSamples + 8; ++i) {
    const double z = support_ * i / kSamples;
    const double v = profile_(z);
    if (v < 0.0 || profile_(-z) != v) {
      throw std::invalid_argument("kernel '" + name_ + "': profile must be even and nonnegative");
    }
    if (v > prev) {
      throw std::invalid_argument("kernel '" + name_ + "': profile must be nonincreasing on z > 0");
    }
    prev = v;
  }
}

Kernel Kernel::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("kernel scale must be positive");
  auto base = profile_;
  return Kernel(name_, [base, c](double z) { return c * base(z); }, support_, c * l1_, c * a_);
}

Kernel builtin_kernel(const std::string& name, const KernelParams& params) {
  if (name == "tent") {
    reject_unknown(params, {"radius", "scale"}, name);
    const double r = param(params, "radius", 1.0);
    const double s = param(params, "scale", 1.0);
    if (!(r > 0.0) || !(s > 0.0)) throw std::invalid_argument("tent: radius and scale must be positive");
    return Kernel(
        name, [r, s](double z) { return s * std::max(0.0, 1.0 - std::abs(z) / r); }, r, s * r,
        s * r * r * r / 12.0);
  }
  if (name == "indicator") {
    reject_unknown(params, {"radius", "scale"}, name);
    const double r = param(params, "radius", 1.0);
    const double s = param(params, "scale", 1.0);
    if (!(r > 0.0) || !(s > 0.0)) {
      throw std::invalid_argument("indicator: radius and scale must be positive");
    }
    return Kernel(
        name, [r, s](double z) { return std::abs(z) <= r ? s : 0.0; }, r, 2.0 * s * r,
        s * r * r * r / 3.0);
  }
  if (name == "truncated_gaussian") {
    reject_unknown(params, {"sigma", "cutoff"}, name);
    const double sigma = param(params, "sigma", 1.0);
    const double cut = param(params, "cutoff", 6.0);
    if (!(sigma > 0.0) || !(cut > 0.0)) {
      throw std::invalid_argument("truncated_gaussian: sigma and cutoff must be positive");
    }
    const double a = cut * sigma;
    const double mass = std::sqrt(2.0 * std::numbers::pi) * sigma * std::erf(cut / std::numbers::sqrt2);
    const double c = 1.0 / mass;
    const double second = sigma * sigma * (mass - 2.0 * a * std::exp(-0.5 * cut * cut));
    return Kernel(
        name,
        [sigma, a, c](double z) {
          return std::abs(z) <= a ? c * std::exp(-0.5 * z * z / (sigma * sigma)) : 0.0;
        },
        a, 1.0, 0.5 * c * second);
  }
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

Kernel normalize_unit_second_moment(const Kernel& k) {
  const double a = k.second_moment_half();
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument("normalize_unit_second_moment: A must be positive and finite");
  }
  if (a == 1.0) return k;
  return k.scaled(1.0 / a);
}

double rescaled(const Kernel& k, double eps, double r) {
  if (!(eps > 0.0)) throw std::invalid_argument("rescaled: eps must be positive");
  return k(r / eps) / (eps * eps * eps);
}

}  // namespace graphdiff

#ifndef GRAPHDIFF_KERNEL_HPP
#define GRAPHDIFF_KERNEL_HPP

#include <functional>
#include <map>
#include <string>

namespace graphdiff {

/// Radial kernel J for the nonlocal operator. J is even, nonnegative,
/// nonincreasing on (0, inf) and positive near the origin. Moments are
/// cached at construction.
class Kernel {
 public:
  /// Builds a kernel from an arbitrary profile; moments by adaptive
  /// quadrature over [-support, support]. Throws if admissibility fails.
  Kernel(std::string name, std::function<double(double)> profile, double support_radius);

  /// Kernel with known moments (checked against the profile by sampling only).
  Kernel(std::string name, std::function<double(double)> profile, double support_radius,
         double l1_norm, double second_moment_half);

  double operator()(double z) const { return profile_(z); }

  const std::string& name() const { return name_; }
  double support_radius() const { return support_; }
  double l1_norm() const { return l1_; }
  /// A = 1/2 * int z^2 J(z) dz.
  double second_moment_half() const { return a_; }

  /// c * J with moments scaled by c.
  Kernel scaled(double c) const;

 private:
  void check_admissible() const;

  std::string name_;
  std::function<double(double)> profile_;
  double support_ = 0.0;
  double l1_ = 0.0;
  double a_ = 0.0;
};

using KernelParams = std::map<std::string, double>;

/// tent: J = scale * (1 - |z|/radius)^+          (radius=1, scale=1)
/// indicator: J = scale * 1{|z| <= radius}        (radius=1, scale=1)
/// truncated_gaussian: unit-mass Gaussian of std `sigma`, cut at `cutoff`
/// standard deviations and renormalized           (sigma=1, cutoff=6)
Kernel builtin_kernel(const std::string& name, const KernelParams& params = {});

/// Scales the kernel so that A = 1.
Kernel normalize_unit_second_moment(const Kernel& k);

/// J_eps(r) = eps^-3 J(r / eps).
double rescaled(const Kernel& k, double eps, double r);

/// Adaptive Simpson on [a, b] to relative tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10);

}  // namespace graphdiff

#endif  // GRAPHDIFF_KERNEL_HPP

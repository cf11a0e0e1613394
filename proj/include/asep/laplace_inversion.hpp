#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "asep/model.hpp"

namespace asep::laplace {

enum class Method { talbot, gaver_stehfest };

/// Inversion of sigma -> F(sigma + shift): `shift` lets callers hand over a
/// transform known at a displaced argument without rescaling in time.
struct InverterSpec {
  Method method = Method::talbot;
  int order = 32;  // Talbot nodes, or the (even) Gaver-Stehfest order
  double shift = 0.0;

  void validate() const;
};

InverterSpec talbot(int nodes = 32, double shift = 0.0);
InverterSpec gaver_stehfest(int order = 16, double shift = 0.0);
/// The other method with the same shift (default orders).
InverterSpec alternate(const InverterSpec& spec);

using Transform = std::function<cplx(cplx)>;
using VectorTransform = std::function<Eigen::VectorXcd(cplx)>;

/// Arguments at which F is evaluated for time t (shift included).
std::vector<cplx> evaluation_points(const InverterSpec& spec, double t);

double invert(const Transform& F, double t, const InverterSpec& spec = {});
Eigen::VectorXd invert_vector(const VectorTransform& F, double t, const InverterSpec& spec = {});

struct CheckedInversion {
  double value;      // primary method
  double alternate;  // the other method
  double discrepancy;
  bool warning;      // relative disagreement above 1e-4
};

CheckedInversion invert_checked(const Transform& F, double t, const InverterSpec& spec = {});

struct ForwardResult {
  cplx value;
  double error_estimate;
};

/// int_0^T e^{-st} v(t) dt from samples starting at t = 0; composite Simpson on
/// uniform grids with an odd number of points, trapezoid otherwise.
ForwardResult forward_transform(std::span<const double> times, std::span<const double> values, cplx s);

}  // namespace asep::laplace

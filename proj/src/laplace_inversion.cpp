#include "asep/laplace_inversion.hpp"

#include <cmath>
#include <numbers>

#include "asep/errors.hpp"
#include "asep/parallel.hpp"

namespace asep::laplace {

namespace {

std::vector<long double> stehfest_weights(int N) {
  auto fact = [](int k) {
    long double f = 1.0L;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  };
  const int h = N / 2;
  std::vector<long double> V(N + 1, 0.0L);
  for (int k = 1; k <= N; ++k) {
    long double sum = 0.0L;
    for (int j = (k + 1) / 2; j <= std::min(k, h); ++j)
      sum += std::pow(static_cast<long double>(j), h) * fact(2 * j) /
             (fact(h - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
    V[k] = ((k + h) % 2 ? -1.0L : 1.0L) * sum;
  }
  return V;
}

void check_finite(cplx v) {
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw InversionError("transform returned a non-finite value at an inversion node");
}

// Fixed Talbot contour: s_k = r theta (cot theta + i), r = 2M / (5t).
struct TalbotNode {
  cplx s;
  cplx weight;  // includes e^{st}, the contour derivative and r / M
};

std::vector<TalbotNode> talbot_nodes(int M, double t) {
  const double r = 2.0 * M / (5.0 * t);
  std::vector<TalbotNode> nodes;
  nodes.push_back({cplx(r, 0.0), 0.5 * std::exp(r * t) * r / M});
  for (int k = 1; k < M; ++k) {
    const double th = k * std::numbers::pi / M;
    const double cot = std::cos(th) / std::sin(th);
    const cplx s = r * th * cplx(cot, 1.0);
    const double sigma = th + (th * cot - 1.0) * cot;
    nodes.push_back({s, std::exp(s * t) * cplx(1.0, sigma) * r / static_cast<double>(M)});
  }
  return nodes;
}

}  // namespace

void InverterSpec::validate() const {
  if (method == Method::gaver_stehfest) {
    if (order < 2 || order % 2 != 0 || order > 18)
      throw DomainError("Gaver-Stehfest order must be even and at most 18");
  } else if (order < 16) {
    throw DomainError("Talbot inversion needs at least 16 nodes");
  }
  if (!std::isfinite(shift)) throw DomainError("shift must be finite");
}

InverterSpec talbot(int nodes, double shift) { return {Method::talbot, nodes, shift}; }
InverterSpec gaver_stehfest(int order, double shift) { return {Method::gaver_stehfest, order, shift}; }
InverterSpec alternate(const InverterSpec& spec) {
  return spec.method == Method::talbot ? gaver_stehfest(16, spec.shift) : talbot(32, spec.shift);
}

std::vector<cplx> evaluation_points(const InverterSpec& spec, double t) {
  spec.validate();
  if (!(t > 0.0)) throw DomainError("inversion needs t > 0");
  std::vector<cplx> pts;
  if (spec.method == Method::talbot) {
    for (const auto& n : talbot_nodes(spec.order, t)) pts.push_back(n.s + spec.shift);
  } else {
    const double a = std::numbers::ln2 / t;
    for (int k = 1; k <= spec.order; ++k) pts.emplace_back(k * a + spec.shift, 0.0);
  }
  return pts;
}

Eigen::VectorXd invert_vector(const VectorTransform& F, double t, const InverterSpec& spec) {
  const auto pts = evaluation_points(spec, t);
  std::vector<Eigen::VectorXcd> vals(pts.size());
  parallel_for(pts.size(), [&](std::size_t k) {
    vals[k] = F(pts[k]);
    for (Eigen::Index i = 0; i < vals[k].size(); ++i) check_finite(vals[k][i]);
  });
  const Eigen::Index m = vals.front().size();
  for (const auto& v : vals)
    if (v.size() != m) throw InversionError("transform returned vectors of varying length");

  Eigen::VectorXd out;
  if (spec.method == Method::talbot) {
    const auto nodes = talbot_nodes(spec.order, t);
    out = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < nodes.size(); ++k) out += (nodes[k].weight * vals[k]).real();
  } else {
    const auto V = stehfest_weights(spec.order);
    const long double a = std::numbers::ln2_v<long double> / t;
    out.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < vals.size(); ++k) acc += V[k + 1] * static_cast<long double>(vals[k][i].real());
      out[i] = static_cast<double>(acc * a);
    }
  }
  if (!out.allFinite()) throw InversionError("inversion sum overflowed");
  return out;
}

double invert(const Transform& F, double t, const InverterSpec& spec) {
  return invert_vector([&](cplx s) { return Eigen::VectorXcd::Constant(1, F(s)); }, t, spec)[0];
}

CheckedInversion invert_checked(const Transform& F, double t, const InverterSpec& spec) {
  const double a = invert(F, t, spec);
  const double b = invert(F, t, alternate(spec));
  const double d = std::abs(a - b);
  return {a, b, d, d > 1e-4 * std::max(1.0, std::abs(a))};
}

ForwardResult forward_transform(std::span<const double> times, std::span<const double> values, cplx s) {
  const std::size_t n = times.size();
  if (n < 2 || values.size() != n) throw DomainError("need at least two samples with matching values");
  if (times.front() != 0.0) throw DomainError("samples must start at t = 0");
  if (!(s.real() > 0.0)) throw DomainError("forward transform needs Re s > 0");
  double vmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k && !(times[k] > times[k - 1])) throw DomainError("sample times must increase");
    vmax = std::max(vmax, std::abs(values[k]));
  }
  const double T = times.back();
  const double tail = std::exp(-s.real() * T) * vmax;
  if (tail > 1e-10) throw TruncationError("samples end before the transform tail is negligible", tail);

  auto f = [&](std::size_t k) { return std::exp(-s * times[k]) * values[k]; };
  cplx trap = 0.0;
  for (std::size_t k = 1; k < n; ++k) trap += 0.5 * (times[k] - times[k - 1]) * (f(k) + f(k - 1));

  const double h = times[1] - times[0];
  bool uniform = n % 2 == 1;
  for (std::size_t k = 1; uniform && k < n; ++k)
    uniform = std::abs(times[k] - times[k - 1] - h) <= 1e-9 * h;
  const double tail_bound = tail / s.real();
  if (!uniform) return {trap, tail_bound + std::abs(trap) * 1e-3};
  auto simpson = [&](std::size_t stride) {
    cplx acc = f(0) + f(n - 1);
    for (std::size_t k = stride, j = 1; k + 1 < n; k += stride, ++j) acc += (j % 2 ? 4.0 : 2.0) * f(k);
    return acc * (stride * h / 3.0);
  };
  const cplx fine = simpson(1);
  // Richardson estimate against the doubled step when the grid allows it.
  const double quad_err = (n - 1) % 4 == 0 ? std::abs(fine - simpson(2)) / 15.0 : std::abs(fine - trap) / 15.0;
  return {fine, quad_err + tail_bound};
}

}  // namespace asep::laplace

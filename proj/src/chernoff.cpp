#include "isodist/chernoff.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "isodist/parallel.hpp"
#include "isodist/stats.hpp"

namespace isodist {

namespace {
constexpr std::uint64_t kScaledStream = 0x5ca1edULL;
}

void ChernoffConfig::validate() const {
  if (!(half_width > 0.0) || !(step > 0.0)) throw std::invalid_argument("ChernoffConfig: M and h must be positive");
  const double r = half_width / step;
  if (std::abs(r - std::round(r)) > 1e-9 * r) throw std::invalid_argument("ChernoffConfig: M/h must be an integer");
  if (samples < 1) throw std::invalid_argument("ChernoffConfig: need at least one sample");
}

std::size_t ChernoffConfig::steps() const { return static_cast<std::size_t>(std::llround(half_width / step)); }

double scaled_argmax_draw(Engine& eng, double a, double b, double half_width, double step) {
  const auto n = static_cast<std::size_t>(std::llround(half_width / step));
  std::normal_distribution<double> z(0.0, std::sqrt(step));
  thread_local std::vector<double> right, left;
  right.assign(n + 1, 0.0);
  left.assign(n + 1, 0.0);
  for (std::size_t s = 1; s <= n; ++s) {
    right[s] = right[s - 1] + z(eng);
    left[s] = left[s - 1] + z(eng);
  }
  // scan u from -M up to M, replacing on >= for the greatest maximizer
  double best_u = 0.0;
  double best = -INFINITY;
  for (std::size_t s = n; s >= 1; --s) {
    const double u = -static_cast<double>(s) * step;
    const double v = a * left[s] - b * u * u;
    if (v >= best) {
      best = v;
      best_u = u;
    }
  }
  for (std::size_t s = 0; s <= n; ++s) {
    const double u = static_cast<double>(s) * step;
    const double v = a * right[s] - b * u * u;
    if (v >= best) {
      best = v;
      best_u = u;
    }
  }
  return best_u;
}

std::vector<double> sample_chernoff(const ChernoffConfig& cfg) {
  cfg.validate();
  std::vector<double> out(cfg.samples);
  parallel_for(cfg.samples, cfg.jobs, [&](std::size_t i) {
    Engine eng = make_engine(cfg.seed, {i});
    out[i] = scaled_argmax_draw(eng, 1.0, 1.0, cfg.half_width, cfg.step);
  });
  return out;
}

std::vector<double> sample_scaled_argmax(double a, double b, const ChernoffConfig& cfg) {
  cfg.validate();
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("sample_scaled_argmax: a and b must be positive");
  const double s = std::pow(a / b, 2.0 / 3.0);
  const double h = cfg.step * std::min(1.0, s);
  const double m = h * std::ceil(cfg.half_width * std::max(1.0, s) / h);
  std::vector<double> out(cfg.samples);
  parallel_for(cfg.samples, cfg.jobs, [&](std::size_t i) {
    Engine eng = make_engine(cfg.seed, {kScaledStream, i});
    out[i] = scaled_argmax_draw(eng, a, b, m, h);
  });
  return out;
}

ScaledArgmaxCheck scaled_argmax_check(double a, double b, const ChernoffConfig& cfg) {
  const auto direct = sample_scaled_argmax(a, b, cfg);
  auto z = sample_chernoff(cfg);
  const double s = std::pow(a / b, 2.0 / 3.0);
  const double sd_z = sample_sd(z);
  for (auto& v : z) v *= s;
  ScaledArgmaxCheck r;
  r.ks = ks_two_sample(direct, z);
  r.sd_ratio = sample_sd(direct) / sd_z;
  r.expected_ratio = s;
  return r;
}

namespace {
double slope_at(const ModelSpec& model, double t) {
  const auto d = model.mu.derivative(t);
  if (!d) throw std::domain_error("limit scale: mu has no derivative at t (corner)");
  if (*d == 0.0) throw std::domain_error("limit scale: mu'(t) = 0");
  return std::abs(*d);
}
}  // namespace

double limit_scale_inverse(const ModelSpec& model, double t) {
  const double slope = slope_at(model, t);
  const double sig = std::sqrt(sigma_infinity_sq(model, t));
  return std::pow(2.0 * sig / (slope * f_infinity(model, t)), 2.0 / 3.0);
}

double limit_scale_direct(const ModelSpec& model, double t) {
  const double slope = slope_at(model, t);
  const double f = f_infinity(model, t);
  return std::cbrt(4.0 * sigma_infinity_sq(model, t) * slope / (f * f));
}

}  // namespace isodist

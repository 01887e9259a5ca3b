#include "isodist/models.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "isodist/rng.hpp"
#include "isodist/step_function.hpp"

namespace isodist {

namespace {

constexpr double kSlopeTieRel = 1e-9;

bool slopes_equal(double a, double b) { return std::abs(a - b) <= kSlopeTieRel * std::max(std::abs(a), std::abs(b)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- Density

Density Density::uniform() {
  Density d;
  d.slope_ = 0.0;
  d.spec_ = {{"kind", "uniform"}};
  return d;
}

Density Density::linear(double slope) {
  if (!std::isfinite(slope) || std::abs(slope) > 2.0)
    throw std::invalid_argument("Density: linear slope must satisfy |b| <= 2 to stay nonnegative on [0,1]");
  Density d;
  d.slope_ = slope;
  d.spec_ = {{"kind", "linear"}, {"slope", slope}};
  return d;
}

Density Density::mixture(double eps, const Density& f0, const Density& f1) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("Density: mixture weight must lie in [0,1]");
  Density d;
  d.slope_ = (1.0 - eps) * f0.slope_ + eps * f1.slope_;
  d.spec_ = {{"kind", "mixture"}, {"eps", eps}, {"f0", f0.spec_}, {"f1", f1.spec_}};
  return d;
}

double Density::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x + 0.5 * slope_ * (x * x - x);
}

double Density::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("Density::quantile: u outside [0,1]");
  if (u == 0.0) return 0.0;
  // (b/2) x^2 + (1 - b/2) x - u = 0, stable root
  const double p = 1.0 - 0.5 * slope_;
  const double disc = std::max(0.0, p * p + 2.0 * slope_ * u);
  const double x = 2.0 * u / (p + std::sqrt(disc));
  return std::clamp(x, 0.0, 1.0);
}

Density Density::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "uniform") return uniform();
  if (kind == "linear") return linear(j.at("slope").get<double>());
  if (kind == "mixture")
    return mixture(j.at("eps").get<double>(), from_json(j.at("f0")), from_json(j.at("f1")));
  throw std::invalid_argument("Density: unknown kind '" + kind + "'");
}

// ------------------------------------------------------------- MonotoneFn

MonotoneFn::MonotoneFn(std::vector<double> xs, std::vector<double> ys, nlohmann::json spec)
    : xs_(std::move(xs)), ys_(std::move(ys)), spec_(std::move(spec)) {
  if (xs_.size() < 2 || xs_.size() != ys_.size()) throw std::invalid_argument("MonotoneFn: need >= 2 matching nodes");
  if (xs_.front() != 0.0 || xs_.back() != 1.0) throw std::invalid_argument("MonotoneFn: nodes must span [0,1]");
  for (std::size_t i = 1; i < xs_.size(); ++i) {
    if (!(xs_[i] > xs_[i - 1])) throw std::invalid_argument("MonotoneFn: nodes must be strictly increasing");
    if (!(ys_[i] < ys_[i - 1])) throw std::invalid_argument("MonotoneFn: values must be strictly decreasing");
  }
  for (double y : ys_)
    if (!std::isfinite(y)) throw std::invalid_argument("MonotoneFn: non-finite value");
}

MonotoneFn MonotoneFn::linear(double intercept, double slope) {
  if (!(slope < 0.0) || !std::isfinite(slope) || !std::isfinite(intercept))
    throw std::invalid_argument("MonotoneFn: linear slope must be finite and negative");
  MonotoneFn f({0.0, 1.0}, {intercept, intercept + slope},
               {{"kind", "linear"}, {"intercept", intercept}, {"slope", slope}});
  f.kind_ = Kind::Linear;
  f.intercept_ = intercept;
  f.slope_ = slope;
  return f;
}

MonotoneFn MonotoneFn::tabulated(std::vector<double> xs, std::vector<double> ys) {
  nlohmann::json spec = {{"kind", "tabulated"}, {"xs", xs}, {"ys", ys}};
  MonotoneFn f(std::move(xs), std::move(ys), std::move(spec));
  f.kind_ = Kind::Tabulated;
  return f;
}

MonotoneFn MonotoneFn::smooth_perturbed(const MonotoneFn& base, double x0, double eps0, double c) {
  if (!(eps0 > 0.0) || !(x0 - eps0 > 0.0) || !(x0 + eps0 < 1.0))
    throw std::invalid_argument("MonotoneFn: perturbation window must lie inside (0,1)");
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("MonotoneFn: inner slope magnitude must be positive");
  const double xl = x0 - eps0, xm = x0 + 0.5 * eps0, xr = x0 + eps0;
  const double yl = base(xl), y0 = base(x0), yr = base(xr);
  const double ym = y0 - c * 0.5 * eps0;
  if (!(ym > yr))
    throw std::invalid_argument("MonotoneFn: inner slope " + fmt(c) + " too steep for a decreasing return segment");

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < base.xs_.size() && base.xs_[i] < xl; ++i) {
    xs.push_back(base.xs_[i]);
    ys.push_back(base.ys_[i]);
  }
  for (double x : {xl, x0, xm, xr}) {
    xs.push_back(x);
    ys.push_back(x == xm ? ym : base(x));
  }
  for (std::size_t i = 0; i < base.xs_.size(); ++i) {
    if (base.xs_[i] > xr) {
      xs.push_back(base.xs_[i]);
      ys.push_back(base.ys_[i]);
    }
  }
  nlohmann::json spec = {{"kind", "smooth_perturbed"}, {"base", base.spec_}, {"x0", x0}, {"eps0", eps0}, {"c", c}};
  MonotoneFn f(std::move(xs), std::move(ys), std::move(spec));
  f.kind_ = Kind::Perturbed;
  f.base_ = std::make_shared<const MonotoneFn>(base);
  f.lo_ = xl;
  f.hi_ = xr;
  (void)yl;
  return f;
}

double MonotoneFn::operator()(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("MonotoneFn: x outside [0,1]");
  switch (kind_) {
    case Kind::Linear:
      return intercept_ + slope_ * x;
    case Kind::Perturbed:
      // exact agreement with the base outside the window
      if (x <= lo_ || x >= hi_) return (*base_)(x);
      break;
    case Kind::Tabulated:
      break;
  }
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs_.begin());
  if (i >= xs_.size()) return ys_.back();
  if (i == 0) return ys_.front();
  --i;
  if (x == xs_[i]) return ys_[i];
  const double s = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
  return ys_[i] + s * (x - xs_[i]);
}

double MonotoneFn::segment_slope(std::size_t i) const {
  if (kind_ == Kind::Linear) return slope_;
  return (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
}

std::optional<double> MonotoneFn::derivative(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("MonotoneFn: x outside [0,1]");
  if (kind_ == Kind::Linear) return slope_;
  const auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  const auto i = static_cast<std::size_t>(it - xs_.begin());
  if (it != xs_.end() && *it == x) {
    if (i == 0) return segment_slope(0);
    if (i + 1 == xs_.size()) return segment_slope(i - 1);
    const double l = segment_slope(i - 1), r = segment_slope(i);
    if (!slopes_equal(l, r)) return std::nullopt;
    return l;
  }
  return segment_slope(i - 1);
}

double MonotoneFn::inverse(double a) const {
  if (a > ys_.front()) return 0.0;
  if (a < ys_.back()) return 1.0;
  if (kind_ == Kind::Linear) return std::clamp((a - intercept_) / slope_, 0.0, 1.0);
  // first node with value <= a
  const auto it = std::partition_point(ys_.begin(), ys_.end(), [a](double y) { return y > a; });
  const auto i = static_cast<std::size_t>(it - ys_.begin());
  if (ys_[i] == a || i == 0) return xs_[i];
  const double t = (a - ys_[i - 1]) / (ys_[i] - ys_[i - 1]);
  return xs_[i - 1] + t * (xs_[i] - xs_[i - 1]);
}

double MonotoneFn::min_abs_slope() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < xs_.size(); ++i) m = std::min(m, std::abs(segment_slope(i)));
  return m;
}

double MonotoneFn::max_abs_slope() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < xs_.size(); ++i) m = std::max(m, std::abs(segment_slope(i)));
  return m;
}

std::size_t MonotoneFn::corner_count() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < xs_.size(); ++i)
    if (!slopes_equal(segment_slope(i - 1), segment_slope(i))) ++n;
  return n;
}

double MonotoneFn::sup_abs() const { return std::max(std::abs(ys_.front()), std::abs(ys_.back())); }

MonotoneFn MonotoneFn::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") return linear(j.at("intercept").get<double>(), j.at("slope").get<double>());
  if (kind == "tabulated") return tabulated(j.at("xs").get<std::vector<double>>(), j.at("ys").get<std::vector<double>>());
  if (kind == "smooth_perturbed")
    return smooth_perturbed(from_json(j.at("base")), j.at("x0").get<double>(), j.at("eps0").get<double>(),
                            j.at("c").get<double>());
  throw std::invalid_argument("MonotoneFn: unknown kind '" + kind + "'");
}

double extend_g(const MonotoneFn& mu, double a) {
  return extend_inverse([&mu](double x) { return mu(x); }, a, 1e-12);
}

// ------------------------------------------------------------- ModelSpec

std::size_t GrowingMixture::population_count(std::size_t n) const {
  std::size_t m = 1;
  while ((m + 1) * (m + 1) * (m + 1) * (m + 1) <= n) ++m;
  return m;
}

ModelSpec ModelSpec::at(std::size_t n) const {
  if (!growing) return *this;
  if (n == 0) throw std::invalid_argument("ModelSpec::at: n must be positive");
  ModelSpec out = *this;
  out.growing.reset();
  out.pops.clear();
  const auto& g = *growing;
  const std::size_t m = g.population_count(n);
  const std::size_t block = n / m;
  for (std::size_t j = 1; j <= m; ++j) {
    const double eps = g.eps1 / static_cast<double>(j);
    const std::size_t nj = j < m ? block : n - (m - 1) * block;
    out.pops.push_back({Density::mixture(eps, g.f0, g.f1), g.sigma, g.noise,
                        static_cast<double>(nj) / static_cast<double>(n)});
  }
  if (!out.limit) out.limit = LimitSpec{g.f0, g.sigma};
  return out;
}

namespace {
void require_static(const ModelSpec& m, const char* what) {
  if (m.growing) throw std::logic_error(std::string(what) + ": resolve the growing family with at(n) first");
  if (m.pops.empty()) throw std::invalid_argument(std::string(what) + ": model has no populations");
}
}  // namespace

double ModelSpec::mixture_density(double u) const {
  require_static(*this, "mixture_density");
  double s = 0.0;
  for (const auto& p : pops) s += p.share * p.density.pdf(u);
  return s;
}

double ModelSpec::mixture_cdf(double u) const {
  require_static(*this, "mixture_cdf");
  double s = 0.0;
  for (const auto& p : pops) s += p.share * p.density.cdf(u);
  return s;
}

double ModelSpec::sigma_x_sq(double u) const {
  require_static(*this, "sigma_x_sq");
  double s = 0.0;
  for (const auto& p : pops) s += p.share * p.sigma * p.sigma * p.density.pdf(u);
  return s;
}

namespace {
const char* noise_name(NoiseKind k) { return k == NoiseKind::Gaussian ? "gaussian" : "bernoulli"; }
NoiseKind noise_from(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "bernoulli") return NoiseKind::Bernoulli;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}
}  // namespace

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["mu"] = mu.to_json();
  j["constants"] = {{"C1", constants.c1}, {"C2", constants.c2}, {"C3", constants.c3},
                    {"C4", constants.c4}, {"C5", constants.c5}};
  if (growing) {
    j["growing"] = {{"f0", growing->f0.to_json()},
                    {"f1", growing->f1.to_json()},
                    {"eps1", growing->eps1},
                    {"sigma", growing->sigma},
                    {"noise", noise_name(growing->noise)}};
  } else {
    j["populations"] = nlohmann::json::array();
    for (const auto& p : pops)
      j["populations"].push_back(
          {{"density", p.density.to_json()}, {"sigma", p.sigma}, {"noise", noise_name(p.noise)}, {"share", p.share}});
  }
  if (limit) j["limit"] = {{"density", limit->density.to_json()}, {"sigma", limit->sigma}};
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec m;
  m.mu = MonotoneFn::from_json(j.at("mu"));
  if (j.contains("constants")) {
    const auto& c = j.at("constants");
    m.constants.c1 = c.value("C1", m.constants.c1);
    m.constants.c2 = c.value("C2", m.constants.c2);
    m.constants.c3 = c.value("C3", m.constants.c3);
    m.constants.c4 = c.value("C4", m.constants.c4);
    m.constants.c5 = c.value("C5", m.constants.c5);
  }
  if (j.contains("growing")) {
    const auto& g = j.at("growing");
    GrowingMixture gm;
    gm.f0 = Density::from_json(g.at("f0"));
    gm.f1 = Density::from_json(g.at("f1"));
    gm.eps1 = g.value("eps1", gm.eps1);
    gm.sigma = g.value("sigma", gm.sigma);
    gm.noise = noise_from(g.value("noise", std::string("gaussian")));
    if (!(gm.eps1 > 0.0 && gm.eps1 < 1.0)) throw std::invalid_argument("growing: eps1 must lie in (0,1)");
    m.growing = gm;
  } else {
    for (const auto& p : j.at("populations")) {
      PopulationSpec ps;
      ps.density = Density::from_json(p.at("density"));
      ps.sigma = p.value("sigma", 0.0);
      ps.noise = noise_from(p.value("noise", std::string("gaussian")));
      ps.share = p.value("share", 1.0);
      if (!(ps.sigma >= 0.0) || !std::isfinite(ps.sigma)) throw std::invalid_argument("population sigma must be >= 0");
      if (!(ps.share > 0.0)) throw std::invalid_argument("population share must be positive");
      m.pops.push_back(ps);
    }
    if (m.pops.empty()) throw std::invalid_argument("model needs at least one population");
  }
  if (j.contains("limit")) {
    const auto& l = j.at("limit");
    m.limit = LimitSpec{Density::from_json(l.at("density")), l.value("sigma", 0.0)};
  }
  return m;
}

ModelSpec ModelSpec::homogeneous_linear(double sigma) {
  ModelSpec m;
  m.mu = MonotoneFn::linear(1.0, -1.0);
  m.pops = {PopulationSpec{Density::uniform(), sigma, NoiseKind::Gaussian, 1.0}};
  return m;
}

// ------------------------------------------------------------ generation

std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& shares, std::size_t n) {
  if (shares.empty()) throw std::invalid_argument("largest_remainder_counts: no shares");
  std::vector<std::size_t> counts(shares.size());
  std::vector<double> frac(shares.size());
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < shares.size(); ++j) {
    const double exact = shares[j] * static_cast<double>(n);
    const double fl = std::floor(exact);
    counts[j] = static_cast<std::size_t>(fl);
    frac[j] = exact - fl;
    assigned += counts[j];
  }
  if (assigned > n) throw std::invalid_argument("largest_remainder_counts: shares exceed 1");
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[order[r % order.size()]];
  return counts;
}

Dataset generate_dataset(const ModelSpec& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_dataset: N must be >= 1");
  const ModelSpec m = model.at(n);
  std::vector<double> shares;
  double total = 0.0;
  for (const auto& p : m.pops) {
    shares.push_back(p.share);
    total += p.share;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("generate_dataset: population shares sum to " + fmt(total) + ", not 1");
  const auto counts = largest_remainder_counts(shares, n);
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] == 0)
      throw std::invalid_argument("A4 violated: population " + std::to_string(j + 1) +
                                  " receives no observations at N=" + std::to_string(n));

  Dataset d;
  d.x.reserve(n);
  d.y.reserve(n);
  d.pop.reserve(n);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const auto& p = m.pops[j];
    Engine eng = make_engine(seed, {j});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < counts[j]; ++i) {
      const double x = p.density.quantile(unif(eng));
      double e = 0.0;
      if (p.sigma > 0.0) e = p.noise == NoiseKind::Gaussian ? p.sigma * gauss(eng) : (coin(eng) ? p.sigma : -p.sigma);
      d.x.push_back(x);
      d.y.push_back(m.mu(x) + e);
      d.pop.push_back(static_cast<std::uint32_t>(j));
    }
  }
  return d;
}

double f_infinity(const ModelSpec& model, double u) {
  if (model.limit) return model.limit->density.pdf(u);
  if (model.growing) return model.growing->f0.pdf(u);
  return model.mixture_density(u);
}

double sigma_infinity_sq(const ModelSpec& model, double u) {
  if (model.limit) return model.limit->sigma * model.limit->sigma * model.limit->density.pdf(u);
  if (model.growing) return model.growing->sigma * model.growing->sigma * model.growing->f0.pdf(u);
  return model.sigma_x_sq(u);
}

// ----------------------------------------------------------- assumptions

bool AssumptionReport::hard_ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AssumptionCheck& c) { return c.passed || c.category != CheckCategory::Hard; });
}

const AssumptionCheck& AssumptionReport::get(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return c;
  throw std::out_of_range("AssumptionReport: no check '" + id + "'");
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    const char* cat = c.category == CheckCategory::Hard ? "hard" : c.category == CheckCategory::Asymptotic ? "asymptotic" : "limit";
    arr.push_back({{"id", c.id},
                   {"category", cat},
                   {"passed", c.passed},
                   {"measured", c.measured},
                   {"threshold", c.threshold},
                   {"detail", c.detail}});
  }
  return arr;
}

std::size_t default_bin_count(std::size_t n) {
  if (n < 2) return 1;
  const double nd = static_cast<double>(n);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(std::cbrt(nd) * std::log(nd))));
}

AssumptionReport validate_assumptions(const ModelSpec& model, std::size_t n, std::size_t k,
                                      const AssumptionThresholds& thresholds) {
  if (n == 0) throw std::invalid_argument("validate_assumptions: N must be >= 1");
  const ModelSpec m = model.at(n);
  const auto& c = m.constants;
  AssumptionReport rep;
  auto add = [&rep](std::string id, CheckCategory cat, bool ok, double measured, double threshold, std::string detail) {
    rep.checks.push_back({std::move(id), cat, ok, measured, threshold, std::move(detail)});
  };

  constexpr std::size_t grid = 10000;
  double fmin = std::numeric_limits<double>::infinity(), fmax = 0.0;
  double f_gap = 0.0, s_gap = 0.0, finf_min = std::numeric_limits<double>::infinity();
  double sinf_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= grid; ++i) {
    const double u = static_cast<double>(i) / grid;
    const double f = m.mixture_density(u);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    const double finf = f_infinity(m, u);
    const double sinf = sigma_infinity_sq(m, u);
    finf_min = std::min(finf_min, finf);
    sinf_min = std::min(sinf_min, sinf);
    f_gap = std::max(f_gap, std::abs(f - finf));
    s_gap = std::max(s_gap, std::abs(m.sigma_x_sq(u) - sinf));
  }
  add("A1", CheckCategory::Hard, fmin > c.c1 && fmax <= c.c2, fmin, c.c1,
      "f_X in [" + fmt(fmin) + ", " + fmt(fmax) + "] vs (C1, C2] = (" + fmt(c.c1) + ", " + fmt(c.c2) + "]");

  double smax = 0.0;
  bool finite = true;
  for (const auto& p : m.pops) {
    smax = std::max(smax, p.sigma);
    finite = finite && std::isfinite(p.sigma);
  }
  add("A2", CheckCategory::Hard, finite, smax, 0.0, "max conditional noise sd " + fmt(smax));

  const double smin_abs = m.mu.min_abs_slope(), smax_abs = m.mu.max_abs_slope();
  add("A3", CheckCategory::Hard, smin_abs > c.c3 && smax_abs < c.c4, smin_abs, c.c3,
      "|slope| in [" + fmt(smin_abs) + ", " + fmt(smax_abs) + "] vs (C3, C4) = (" + fmt(c.c3) + ", " + fmt(c.c4) + ")");

  const double supmu = m.mu.sup_abs();
  add("F1", CheckCategory::Hard, supmu <= c.c5, supmu, c.c5, "sup|mu| = " + fmt(supmu));

  std::vector<double> shares;
  for (const auto& p : m.pops) shares.push_back(p.share);
  double share_sum = std::accumulate(shares.begin(), shares.end(), 0.0);
  const bool shares_ok = std::abs(share_sum - 1.0) <= 1e-12;
  std::size_t min_count = 0;
  if (shares_ok) {
    const auto counts = largest_remainder_counts(shares, n);
    min_count = *std::min_element(counts.begin(), counts.end());
  }
  add("A4.shares", CheckCategory::Hard, shares_ok && min_count > 0, static_cast<double>(min_count), 1.0,
      "shares sum to " + fmt(share_sum) + ", smallest population count " + std::to_string(min_count));

  const double nd = static_cast<double>(n);
  const double bins_ratio = static_cast<double>(k) / std::cbrt(nd);
  add("A4.bins", CheckCategory::Asymptotic, bins_ratio >= thresholds.bins_ratio_min, bins_ratio,
      thresholds.bins_ratio_min, "K N^{-1/3} = " + fmt(bins_ratio) + " (K=" + std::to_string(k) + ")");

  const double lambda = static_cast<double>(min_count) / nd;
  const double logn = std::log(nd);
  const double lambda_ratio = n < 2 ? std::numeric_limits<double>::infinity() : lambda * std::cbrt(nd) / (logn * logn * logn);
  add("A4.lambda", CheckCategory::Asymptotic, lambda_ratio >= thresholds.lambda_ratio_min, lambda_ratio,
      thresholds.lambda_ratio_min, "lambda N^{1/3} (log N)^{-3} = " + fmt(lambda_ratio) + " (lambda=" + fmt(lambda) + ")");

  double fj_sup = 0.0, fj_lip = 0.0;
  for (const auto& p : m.pops) {
    fj_sup = std::max(fj_sup, p.density.sup());
    fj_lip = std::max(fj_lip, std::abs(p.density.slope()));
  }
  add("A0~", CheckCategory::Limit, std::isfinite(fj_sup), fj_sup, 0.0, "sup_j sup f_j = " + fmt(fj_sup));
  add("A1~", CheckCategory::Limit, std::isfinite(fj_lip), fj_lip, 0.0,
      "common Lipschitz constant of f_j (sigma_j constant) = " + fmt(fj_lip));
  add("A2~", CheckCategory::Limit, finf_min > 0.0, f_gap, 0.0,
      "sup|f_X - f_inf| = " + fmt(f_gap) + ", inf f_inf = " + fmt(finf_min));
  add("A3~", CheckCategory::Limit, sinf_min > 0.0, s_gap, 0.0,
      "sup|sigma_X^2 - sigma_inf^2| = " + fmt(s_gap) + ", inf sigma_inf^2 = " + fmt(sinf_min));
  add("A4~", CheckCategory::Limit, finite, smax, 0.0, "gaussian or bounded noise: all moments finite");
  const auto corners = m.mu.corner_count();
  add("A5~", CheckCategory::Limit, corners == 0 && smin_abs > 0.0, static_cast<double>(corners), 0.0,
      std::to_string(corners) + " slope discontinuities in mu");
  return rep;
}

}  // namespace isodist

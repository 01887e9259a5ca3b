#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "isodist/chernoff.hpp"
#include "isodist/cluster.hpp"
#include "isodist/estimators.hpp"
#include "isodist/experiments.hpp"
#include "isodist/isotonic.hpp"
#include "isodist/models.hpp"

namespace py = pybind11;
using namespace isodist;

namespace {

ModelSpec parse_model(const std::string& text) { return ModelSpec::from_json(nlohmann::json::parse(text)); }

Dataset make_dataset(std::vector<double> x, std::vector<double> y, std::vector<std::uint32_t> pop) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
  Dataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  // python side uses 1-based populations, like the CSV files
  for (auto p : pop) {
    if (p == 0) throw std::invalid_argument("populations are numbered from 1");
    d.pop.push_back(p - 1);
  }
  if (d.pop.empty()) d.pop.assign(d.x.size(), 0);
  if (d.pop.size() != d.x.size()) throw std::invalid_argument("pop has the wrong length");
  return d;
}

}  // namespace

PYBIND11_MODULE(_isodist, m) {
  m.doc() = "Distributed monotone regression: pooled, global and BDSE estimators";

  py::register_exception<std::domain_error>(m, "DomainError", PyExc_ValueError);

  m.def("pava_antitonic", [](std::vector<double> y, std::vector<double> w) {
    if (w.empty()) w.assign(y.size(), 1.0);
    return pava_antitonic(WeightedSeries{std::move(y), std::move(w)}).fitted;
  }, py::arg("y"), py::arg("w") = std::vector<double>{});

  m.def("default_bin_count", &default_bin_count, py::arg("n"));

  m.def("generate", [](const std::string& model, std::size_t n, std::uint64_t seed) {
    auto d = generate_dataset(parse_model(model), n, seed);
    std::vector<std::uint32_t> pop(d.pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i] = d.pop[i] + 1;
    return py::make_tuple(std::move(d.x), std::move(d.y), std::move(pop));
  }, py::arg("model_json"), py::arg("n"), py::arg("seed"));

  m.def("validate_assumptions", [](const std::string& model, std::size_t n, std::size_t k) {
    return validate_assumptions(parse_model(model), n, k > 0 ? k : default_bin_count(n)).to_json().dump();
  }, py::arg("model_json"), py::arg("n"), py::arg("k") = 0);

  py::class_<PooledFit>(m, "PooledFit")
      .def_property_readonly("bins", &PooledFit::bins)
      .def_property_readonly("fitted", [](const PooledFit& f) { return f.fit.fitted; })
      .def_property_readonly("counts", [](const PooledFit& f) { return f.reg.counts; })
      .def("muhat", [](const PooledFit& f, double t) { return f.muhat(t); }, py::arg("t"))
      .def("inverse", &pooled_inverse, py::arg("a"));

  m.def("pooled_fit", [](std::vector<double> x, std::vector<double> y, std::size_t k, std::size_t servers,
                          const std::string& policy, std::uint64_t seed, std::vector<std::uint32_t> pop) {
    const auto d = make_dataset(std::move(x), std::move(y), std::move(pop));
    if (k == 0) k = default_bin_count(d.size());
    const auto alloc = allocate(d.size(), servers, parse_policy(policy), seed, d.pop);
    return pooled_fit(merge_summaries(local_summaries(d, alloc, k), d.size()));
  }, py::arg("x"), py::arg("y"), py::arg("k") = 0, py::arg("servers") = 1, py::arg("policy") = "contiguous",
     py::arg("seed") = 1, py::arg("pop") = std::vector<std::uint32_t>{});

  py::class_<GlobalFit>(m, "GlobalFit")
      .def_property_readonly("xs", [](const GlobalFit& g) { return g.xs; })
      .def_property_readonly("fitted", [](const GlobalFit& g) { return g.fit.fitted; })
      .def("muhat", [](const GlobalFit& g, double t) { return g.muhat(t); }, py::arg("t"))
      .def("inverse", &global_inverse, py::arg("a"));

  m.def("global_fit", [](const std::vector<double>& x, const std::vector<double>& y) { return global_fit(x, y); },
        py::arg("x"), py::arg("y"));

  m.def("bdse", [](std::vector<double> x, std::vector<double> y, std::size_t servers, double value, bool inverse) {
    const auto d = make_dataset(std::move(x), std::move(y), {});
    const BdseFit b(d, allocate(d.size(), servers, AllocationPolicy::Contiguous, 0));
    return (inverse ? b.inverse(value) : b.direct(value)).value;
  }, py::arg("x"), py::arg("y"), py::arg("servers"), py::arg("value"), py::arg("inverse") = true);

  m.def("sample_chernoff", [](std::size_t samples, std::uint64_t seed, double step, double half_width, unsigned jobs) {
    ChernoffConfig c;
    c.samples = samples;
    c.seed = seed;
    c.step = step;
    c.half_width = half_width;
    c.jobs = jobs;
    py::gil_scoped_release nogil;
    return sample_chernoff(c);
  }, py::arg("samples"), py::arg("seed") = 1, py::arg("step") = 0.005, py::arg("half_width") = 3.0,
     py::arg("jobs") = 1);

  m.def("mc_risk", [](const std::string& config) {
    const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(config));
    RiskReport rep;
    {
      py::gil_scoped_release nogil;
      rep = mc_risk(cfg);
    }
    return rep.to_json().dump();
  }, py::arg("config_json"));

#ifdef ISODIST_VERSION
  m.attr("__version__") = ISODIST_VERSION;
#endif
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "ivpotts/analysis.hpp"
#include "ivpotts/biased_rc.hpp"
#include "ivpotts/config.hpp"
#include "ivpotts/mc.hpp"
#include "ivpotts/potts.hpp"
#include "ivpotts/verify.hpp"

namespace py = pybind11;
using namespace ivp;

namespace {

ModelParams params_of(double q, double r, double beta) {
  ModelParams p;
  p.q = q;
  p.r = r;
  p.beta = beta;
  p.validate();
  return p;
}

BoundaryClass parse_class(const std::string& s) {
  if (s == "plain") return BoundaryClass::plain;
  if (s == "disordered") return BoundaryClass::disordered;
  if (s == "ordered") return BoundaryClass::ordered;
  throw std::invalid_argument("unknown boundary class: " + s);
}

py::dict histogram_dict(const Histogram& h) {
  py::dict d;
  d["edges"] = h.edges;
  d["counts"] = h.counts;
  return d;
}

py::dict check_dict(const CheckResult& r) {
  py::dict d;
  d["name"] = r.name;
  d["passed"] = r.passed;
  d["complete"] = r.complete;
  d["value"] = r.value;
  d["tolerance"] = r.tolerance;
  d["detail"] = r.detail;
  return d;
}

}  // namespace

PYBIND11_MODULE(ivpotts, m) {
  m.doc() = "Potts model with invisible colours: exact sums, contours and Monte Carlo";
  m.attr("__version__") = code_version();

  py::register_exception<CapExceeded>(m, "CapExceeded", PyExc_RuntimeError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init(&params_of), py::arg("q") = 2.0, py::arg("r") = 1.0, py::arg("beta") = std::log(2.0))
      .def_readwrite("q", &ModelParams::q)
      .def_readwrite("r", &ModelParams::r)
      .def_readwrite("beta", &ModelParams::beta)
      .def_property_readonly("p_beta", &ModelParams::p_beta)
      .def("validate", &ModelParams::validate)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(q=" + std::to_string(p.q) + ", r=" + std::to_string(p.r) +
               ", beta=" + std::to_string(p.beta) + ")";
      });

  py::class_<Volume>(m, "Volume")
      .def_static("window", &make_window, py::arg("n"))
      .def_static("rect", &make_rect, py::arg("w"), py::arg("h"))
      .def_property_readonly("num_sites", &Volume::num_sites)
      .def_property_readonly("num_bonds", &Volume::num_bonds)
      .def_property_readonly("sites", [](const Volume& v) {
        std::vector<std::pair<int, int>> out;
        for (const Site& s : v.sites()) out.emplace_back(s.x, s.y);
        return out;
      });

  m.def("beta_bar_c", &beta_bar_c, py::arg("q_plus_r"));
  m.def("latent_heat_asymptote", &latent_heat_asymptote, py::arg("q_plus_r"));

  m.def(
      "log_partition_free",
      [](const Volume& v, const ModelParams& p) { return log_partition_free(v, p); }, py::arg("volume"),
      py::arg("params"));
  m.def(
      "log_partition_homogeneous",
      [](const Volume& v, const ModelParams& p, int k) { return log_partition_homogeneous(v, p, k); },
      py::arg("volume"), py::arg("params"), py::arg("colour"));
  m.def(
      "rc_log_partition",
      [](const Volume& v, double p, double q, double r, const std::string& bc) {
        return log_partition_class(v, p, q, r, parse_class(bc));
      },
      py::arg("volume"), py::arg("p"), py::arg("q"), py::arg("r"), py::arg("boundary") = "plain");

  m.def(
      "energy_curves",
      [](double q, double r, const std::vector<double>& betas) {
        py::list rows;
        for (const PressureRow& row : energy_curves(q, r, betas).rows) {
          py::dict d;
          d["beta"] = row.beta;
          d["e_order"] = row.e_order;
          d["e_disorder"] = row.e_disorder;
          d["F"] = row.F;
          rows.append(d);
        }
        return rows;
      },
      py::arg("q"), py::arg("r"), py::arg("betas"));

  m.def(
      "run_chain",
      [](double q, double r, double beta, std::optional<std::array<int, 2>> torus, int size,
         const std::string& sampler, const std::string& boundary, int colour, int sweeps, int burn_in,
         std::uint64_t seed, std::uint64_t stream) {
        ChainConfig c;
        c.params = params_of(q, r, beta);
        c.volume = make_rect(size, size);
        c.torus = torus;
        c.sampler = parse_sampler(sampler);
        c.boundary = parse_boundary(boundary);
        c.colour = colour;
        c.sweeps = sweeps;
        c.burn_in = burn_in;
        c.seed = seed;
        c.stream = stream;
        ChainResult res;
        {
          py::gil_scoped_release release;
          res = run_chain(c);
        }
        py::dict d;
        d["sweep"] = res.series.sweep;
        d["energy_per_site"] = res.series.energy_per_site;
        d["colour_fractions"] = res.series.colour_fractions;
        d["largest_component_fraction"] = res.series.largest_component_fraction;
        d["isolated_fraction"] = res.series.isolated_fraction;
        d["num_sites"] = res.manifest.num_sites;
        return d;
      },
      py::arg("q"), py::arg("r"), py::arg("beta"), py::arg("torus") = py::none(), py::arg("size") = 16,
      py::arg("sampler") = "cluster", py::arg("boundary") = "free", py::arg("colour") = 1,
      py::arg("sweeps") = 1000, py::arg("burn_in") = 100, py::arg("seed") = 1, py::arg("stream") = 0);

  m.def(
      "energy_histogram",
      [](const std::vector<double>& e, int sites) { return histogram_dict(energy_histogram(e, sites)); },
      py::arg("energy_per_site"), py::arg("sites"));
  m.def(
      "detect_bimodality",
      [](const std::vector<double>& edges, const std::vector<std::size_t>& counts, double threshold) {
        Histogram h{edges, counts};
        if (h.edges.size() != h.counts.size() + 1) throw std::invalid_argument("need len(edges) == len(counts) + 1");
        const BimodalityReport b = detect_bimodality(h, threshold);
        py::dict d;
        d["bimodal"] = b.bimodal;
        d["dip_ratio"] = b.dip_ratio;
        d["mode_low"] = b.mode_low;
        d["mode_high"] = b.mode_high;
        return d;
      },
      py::arg("edges"), py::arg("counts"), py::arg("threshold") = 0.7);

  m.def(
      "verify",
      [](const std::string& scale, std::uint64_t seed, int threads) {
        VerifyOptions opt;
        opt.scale = parse_scale(scale);
        opt.seed = seed;
        opt.threads = threads;
        std::vector<CheckResult> results;
        {
          py::gil_scoped_release release;
          results = run_verification(opt);
        }
        py::list out;
        for (const CheckResult& r : results) out.append(check_dict(r));
        return out;
      },
      py::arg("scale") = "desk", py::arg("seed") = 1, py::arg("threads") = 1);
}

// Python bindings for the main operations: kernels, sampling, the exact
// oracle, the simulators, the mean-field solver and the limit chain.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <vector>

#include "cips/coupling.hpp"
#include "cips/errors.hpp"
#include "cips/experiments.hpp"
#include "cips/ips_sim.hpp"
#include "cips/limit_chain.hpp"
#include "cips/meanfield.hpp"
#include "cips/oracle.hpp"
#include "cips/rate_kernel.hpp"
#include "cips/rng.hpp"
#include "cips/state.hpp"
#include "cips/tagged_sim.hpp"

namespace py = pybind11;
using namespace cips;

namespace {

RateKernel make_kernel(const std::string& family, double parameter) {
  if (family == "independent") return RateKernel::independent_walkers();
  if (family == "zero-range") return RateKernel::zero_range(parameter);
  if (family == "inclusion") return RateKernel::inclusion(parameter);
  throw ConfigError("unknown kernel family: " + family);
}

InitScheme make_scheme(const std::string& tagged) {
  InitScheme scheme;
  if (tagged == "fixed") {
    scheme.tagged = TaggedSiteScheme::FixedSite;
  } else if (tagged == "uniform") {
    scheme.tagged = TaggedSiteScheme::UniformSite;
  } else if (tagged == "max") {
    scheme.tagged = TaggedSiteScheme::MaxSite;
  } else {
    throw ConfigError("tagged scheme must be fixed, uniform or max");
  }
  return scheme;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Condensing interacting particle systems on the complete graph: "
            "simulators, mean-field solver, tagged-particle limit objects";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericalError>(m, "NumericalError");
  py::register_exception<InvariantError>(m, "InvariantError");

  py::class_<RateKernel>(m, "RateKernel")
      .def_static("independent_walkers", &RateKernel::independent_walkers)
      .def_static("zero_range", &RateKernel::zero_range, py::arg("b"))
      .def_static("inclusion", &RateKernel::inclusion, py::arg("d"))
      .def_static("table", &RateKernel::table, py::arg("rates"))
      .def("evaluate", &RateKernel::evaluate, py::arg("k"), py::arg("l"))
      .def("__call__", &RateKernel::evaluate, py::arg("k"), py::arg("l"))
      .def_property_readonly("sublinearity_constant", &RateKernel::sublinearity_constant)
      .def("certify_sublinearity",
           [](const RateKernel& kernel, std::int64_t k_max, std::int64_t l_max) {
             const SublinearityReport report = kernel.certify_sublinearity(k_max, l_max);
             py::dict out;
             out["c_min"] = report.c_min;
             out["violation"] = report.violation
                                    ? py::object(py::make_tuple(report.violation->first,
                                                                report.violation->second))
                                    : py::object(py::none());
             return out;
           },
           py::arg("k_max"), py::arg("l_max"))
      .def("__repr__", &RateKernel::describe);

  m.def("make_kernel", &make_kernel, py::arg("family"), py::arg("parameter") = 0.0);

  m.def("derive_seed", &derive_seed, py::arg("master_seed"), py::arg("stream_index"),
        "Per-stream seed derivation (splitmix64 finalizer of master ^ golden*(index+1)).");

  m.def(
      "sample_initial",
      [](std::int64_t sites, std::int64_t particles, const std::string& tagged,
         std::uint64_t seed) {
        Rng rng(seed);
        const TaggedState st = sample_initial(sites, particles, make_scheme(tagged), rng);
        py::dict out;
        out["w"] = st.w;
        out["env_counts"] = st.env.counts();
        out["L"] = st.sites;
        out["N"] = st.particles;
        return out;
      },
      py::arg("sites"), py::arg("particles"), py::arg("tagged") = "uniform", py::arg("seed") = 1);

  m.def(
      "simulate_ips",
      [](std::int64_t sites, std::int64_t particles, const RateKernel& kernel,
         std::vector<double> obs_times, std::size_t n_paths, std::uint64_t seed, unsigned jobs) {
        const IpsEnsembleResult r =
            run_ips_ensemble(sites, particles, kernel, obs_times, n_paths, seed, jobs);
        py::dict out;
        out["times"] = r.times;
        out["mean_fk"] = r.mean_fk;
        out["stderr_fk"] = r.se_fk;
        out["m1"] = r.m1;
        out["m2"] = r.m2;
        out["m3"] = r.m3;
        return out;
      },
      py::arg("sites"), py::arg("particles"), py::arg("kernel"), py::arg("obs_times"),
      py::arg("n_paths") = 1000, py::arg("seed") = 1, py::arg("jobs") = 0,
      "Ensemble of the particle system; returns mean empirical measures and moments.");

  m.def(
      "simulate_tagged",
      [](std::int64_t sites, std::int64_t particles, const RateKernel& kernel,
         std::vector<double> obs_times, std::size_t n_paths, std::uint64_t seed,
         const std::string& tagged, unsigned jobs) {
        const TaggedEnsembleResult r = run_tagged_ensemble(
            sites, particles, kernel, make_scheme(tagged), obs_times, n_paths, seed, jobs);
        py::dict out;
        out["times"] = r.times;
        out["w_histogram"] = r.w_histogram;
        out["w_histogram_stderr"] = r.w_histogram_se;
        out["mean_w"] = r.mean_w;
        out["mean_w2"] = r.mean_w2;
        return out;
      },
      py::arg("sites"), py::arg("particles"), py::arg("kernel"), py::arg("obs_times"),
      py::arg("n_paths") = 1000, py::arg("seed") = 1, py::arg("tagged") = "uniform",
      py::arg("jobs") = 0,
      "Ensemble of the tagged-occupation process W.");

  py::class_<MeanFieldSolution>(m, "MeanFieldSolution")
      .def_property_readonly("rho", [](const MeanFieldSolution& s) { return s.rho; })
      .def_property_readonly("grid", [](const MeanFieldSolution& s) { return s.grid; })
      .def("f_at", &MeanFieldSolution::f_at, py::arg("t"))
      .def("p_at", &MeanFieldSolution::p_at, py::arg("t"))
      .def("moment_at", &MeanFieldSolution::moment_at, py::arg("t"), py::arg("n"));

  m.def("poisson_profile", &poisson_profile, py::arg("rho"), py::arg("floor") = 1e-16);
  m.def("size_bias",
        [](std::vector<double> f, double rho) { return size_bias(f, rho); },
        py::arg("f"), py::arg("rho"));

  m.def(
      "integrate_meanfield",
      [](std::vector<double> f0, const RateKernel& kernel, double t_max, double tol,
         double epsilon_tail, bool track_p) {
        MeanFieldOptions options;
        options.tol = tol;
        options.epsilon_tail = epsilon_tail;
        options.track_p = track_p;
        return integrate(f0, kernel, t_max, options);
      },
      py::arg("f0"), py::arg("kernel"), py::arg("t_max"), py::arg("tol") = 1e-9,
      py::arg("epsilon_tail") = 1e-12, py::arg("track_p") = true,
      "Adaptive integration of the occupation hierarchy (and optionally the "
      "size-biased system).");

  m.def(
      "simulate_limit",
      [](const MeanFieldSolution& solution, const RateKernel& kernel,
         std::vector<double> obs_times, std::size_t n_paths, std::uint64_t seed, unsigned jobs) {
        const LimitEnsembleResult r =
            ensemble_law(solution, kernel, obs_times, n_paths, seed, jobs);
        py::dict out;
        out["times"] = r.times;
        out["histogram"] = r.histogram;
        out["histogram_stderr"] = r.histogram_se;
        out["mean_w"] = r.mean_w;
        out["mean_w_stderr"] = r.mean_w_se;
        out["mean_w2"] = r.mean_w2;
        return out;
      },
      py::arg("solution"), py::arg("kernel"), py::arg("obs_times"), py::arg("n_paths") = 10000,
      py::arg("seed") = 1, py::arg("jobs") = 0,
      "Ensemble of the time-inhomogeneous limit occupation chain.");

  m.def(
      "simulate_coupled",
      [](std::int64_t sites, std::int64_t particles, const RateKernel& kernel, double rho,
         std::vector<double> obs_times, std::size_t n_paths, std::uint64_t seed, unsigned jobs) {
        const CoupledEnsembleReport r =
            run_coupled_ensemble(sites, particles, kernel, rho, {TaggedSiteScheme::UniformSite},
                                 obs_times, n_paths, seed, jobs);
        py::dict out;
        out["times"] = r.times;
        out["m2_w"] = r.m2_w;
        out["m2_wbar"] = r.m2_wbar;
        out["mean_wbar"] = r.mean_wbar;
        out["total_violations"] = r.total_violations;
        out["capped_paths"] = r.capped_paths;
        return out;
      },
      py::arg("sites"), py::arg("particles"), py::arg("kernel"), py::arg("rho"),
      py::arg("obs_times"), py::arg("n_paths") = 1000, py::arg("seed") = 1, py::arg("jobs") = 0,
      "Coupled run of W and its dominating process; reports moments and "
      "domination bookkeeping.");

  m.def(
      "oracle_transient",
      [](std::int64_t sites, std::int64_t particles, const RateKernel& kernel, bool tagged,
         const std::string& scheme, std::vector<double> times) {
        const ExactChain chain = ExactChain::build(sites, particles, kernel, tagged);
        const std::vector<double> init = chain.initial_distribution(make_scheme(scheme));
        py::dict out;
        std::vector<std::vector<double>> fk;
        std::vector<std::vector<double>> w_law;
        for (double t : times) {
          const std::vector<double> dist = chain.transient(init, t);
          fk.push_back(chain.mean_fk(dist));
          if (tagged) w_law.push_back(chain.w_marginal(dist));
        }
        out["times"] = times;
        out["mean_fk"] = fk;
        if (tagged) out["w_law"] = w_law;
        out["state_count"] = chain.state_count();
        return out;
      },
      py::arg("sites"), py::arg("particles"), py::arg("kernel"), py::arg("tagged") = false,
      py::arg("scheme") = "uniform", py::arg("times") = std::vector<double>{1.0},
      "Exact transient law of a tiny system via uniformization.");

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}

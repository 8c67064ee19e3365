#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otoclab/brownian.hpp"
#include "otoclab/decomp.hpp"
#include "otoclab/experiments.hpp"
#include "otoclab/quasiprob.hpp"
#include "otoclab/retrodict.hpp"
#include "otoclab/weakmeas.hpp"

namespace py = pybind11;
using namespace otoclab;

namespace {

// Values as an ndarray shaped by the axes, first axis slowest.
py::array_t<cplx> quasi_array(const QuasiDistribution& q) {
    std::vector<py::ssize_t> shape;
    for (const auto& a : q.axes) shape.push_back(a.size());
    py::array_t<cplx> out(shape);
    std::copy(q.values.begin(), q.values.end(), out.mutable_data());
    return out;
}

py::dict series_dict(const EnsembleSeries& s) {
    py::dict d;
    d["times"] = s.times;
    d["mean"] = s.mean;
    d["se_re"] = s.se_re;
    d["se_im"] = s.se_im;
    d["standard_error"] = s.standard_error;
    return d;
}

PhaseMode parse_mode(const std::string& m) {
    if (m == "real") return PhaseMode::real;
    if (m == "imaginary") return PhaseMode::imaginary;
    throw ConfigError("phase mode must be 'real' or 'imaginary'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "OTOC quasiprobabilities, weak measurements and Brownian ensembles";
    m.attr("__version__") = kVersion;

    auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    (void)config_error;

    // ---- spin chain ----
    m.def("ising_hamiltonian",
          [](int n, double j, double h, double g) { return ising_hamiltonian({n, j, h, g}); }, py::arg("n"),
          py::arg("j") = 1.0, py::arg("h") = 0.5, py::arg("g") = 1.05);
    m.def("site_pauli",
          [](int n, int site, const std::string& axis) { return site_pauli(n, site, parse_axis(axis)); },
          py::arg("n"), py::arg("site"), py::arg("axis") = "z");
    m.def("thermal_state", py::overload_cast<const Mat&, double>(&thermal_state), py::arg("hamiltonian"),
          py::arg("temperature"));
    m.def("product_plus_x_state", &product_plus_x_state, py::arg("n"));

    py::class_<Evolver>(m, "Evolver")
        .def(py::init<const Mat&>(), py::arg("hamiltonian"))
        .def_property_readonly("dim", &Evolver::dim)
        .def_property_readonly("energies", [](const Evolver& e) { return e.spectrum().values; })
        .def("propagator", &Evolver::propagator, py::arg("t"))
        .def("heisenberg", &Evolver::heisenberg, py::arg("op"), py::arg("t"));

    // ---- quasiprobabilities ----
    py::class_<QuasiDistribution>(m, "QuasiDistribution")
        .def_property_readonly("fine", [](const QuasiDistribution& q) { return q.grain == Grain::fine; })
        .def_property_readonly("axis_names",
                               [](const QuasiDistribution& q) {
                                   std::vector<std::string> names;
                                   for (const auto& a : q.axes) names.push_back(a.name);
                                   return names;
                               })
        .def_property_readonly("axis_values",
                               [](const QuasiDistribution& q) {
                                   std::vector<std::vector<double>> vals;
                                   for (const auto& a : q.axes) vals.push_back(a.values);
                                   return vals;
                               })
        .def_property_readonly("values", &quasi_array)
        .def("value", &QuasiDistribution::value, py::arg("eigenvalues"))
        .def("sum", &QuasiDistribution::sum);

    py::class_<WorkDistribution>(m, "WorkDistribution")
        .def_readonly("w", &WorkDistribution::w)
        .def_readonly("w_prime", &WorkDistribution::w_prime)
        .def_readonly("values", &WorkDistribution::values)
        .def("at", &WorkDistribution::at, py::arg("w"), py::arg("w_prime"))
        .def("sum", &WorkDistribution::sum);

    m.def("otoc", py::overload_cast<const Mat&, const Mat&, const Mat&, const Evolver&, double>(&otoc),
          py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"));
    m.def("commutator_square",
          py::overload_cast<const Mat&, const Mat&, const Mat&, const Evolver&, double>(&commutator_square),
          py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"));
    m.def("coarse_quasiprob",
          py::overload_cast<const Mat&, const Mat&, const Mat&, const Evolver&, double>(&coarse_quasiprob),
          py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"));
    m.def("fine_quasiprob",
          py::overload_cast<const Mat&, const Mat&, const Mat&, const Evolver&, double>(&fine_quasiprob),
          py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"));
    m.def("coarse_grain", &coarse_grain, py::arg("fine"));
    m.def("work_distribution", &work_distribution, py::arg("quasi"));
    m.def("otoc_moment", &otoc_moment, py::arg("quasi"));
    m.def("work_moment", &work_moment, py::arg("work"));
    m.def(
        "regulated_quasiprob",
        [](const Evolver& ev, double temperature, const Mat& w, const Mat& v, double t) {
            auto r = regulated_quasiprob_and_otoc(ev, temperature, w, v, t);
            return py::make_tuple(r.quasi, r.f_reg);
        },
        py::arg("evolver"), py::arg("temperature"), py::arg("w"), py::arg("v"), py::arg("t"));
    m.def(
        "toc",
        [](const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
            auto r = toc_and_toc_quasiprob(rho, w, v, ev, t);
            return py::make_tuple(r.toc, r.quasi, r.work);
        },
        py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"));
    m.def(
        "kfold",
        [](const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t, int khat) {
            auto r = kfold_otoc_and_quasiprob(rho, w, v, ev, t, khat);
            return py::make_tuple(r.value, r.quasi);
        },
        py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"), py::arg("khat"));
    m.def(
        "coarse_series",
        [](const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, const std::vector<double>& times) {
            CoarseSeriesEngine eng(rho, w, v, ev);
            std::vector<cplx> f;
            std::vector<py::array_t<cplx>> q;
            for (double t : times) {
                auto p = eng.at(t);
                f.push_back(p.otoc);
                q.push_back(quasi_array(p.quasi));
            }
            return py::make_tuple(f, q);
        },
        py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("times"),
        "OTOC and coarse quasiprobability arrays at each time.");

    // ---- weak measurements ----
    m.def(
        "kraus_pair",
        [](const Mat& proj, double phi, const std::string& mode) {
            auto k = kraus_pair(proj, {phi, parse_mode(mode)});
            return py::make_tuple(k.plus, k.minus);
        },
        py::arg("projector"), py::arg("phi"), py::arg("mode") = "real");
    m.def(
        "infer_quasiprob",
        [](const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t, const std::vector<double>& phis,
           std::uint64_t shots, std::uint64_t seed, bool two_measurements) {
            auto runs = run_inference_batch(rho, w, v, ev, t, phis, shots, seed, two_measurements);
            auto r = infer_coarse_quasiprob(runs, spectral_decomposition(w), spectral_decomposition(v));
            py::dict d;
            d["quasi"] = r.quasi;
            d["sigma_re"] = r.sigma_re;
            d["sigma_im"] = r.sigma_im;
            d["max_condition"] = r.max_condition;
            return d;
        },
        py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"), py::arg("phis"),
        py::arg("shots") = 0, py::arg("seed") = 1, py::arg("two_measurements") = false,
        "Infer the coarse quasiprobability from simulated weak-measurement statistics (shots=0 is exact).");

    // ---- Brownian ensemble ----
    m.def(
        "brownian_ensemble",
        [](const Mat& rho, const Mat& w, const Mat& v, int n, double dt, long steps, long trajectories,
           std::uint64_t seed, long sample_every) {
            BrownianConfig c{n, dt, steps, trajectories, seed, sample_every};
            EnsembleResult r;
            {
                py::gil_scoped_release release;
                r = ensemble_averages(c, rho, w, v);
            }
            py::dict d;
            d["times"] = r.times;
            py::dict series;
            for (const auto& [name, s] : r.series) series[py::str(name)] = series_dict(s);
            d["series"] = series;
            py::list quasi;
            for (const auto& s : r.quasi) quasi.append(series_dict(s));
            d["quasi"] = quasi;
            d["max_unitarity_defect"] = r.max_unitarity_defect;
            return d;
        },
        py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("n"), py::arg("dt") = 0.005, py::arg("steps") = 800,
        py::arg("trajectories") = 200, py::arg("seed") = 1, py::arg("sample_every") = 10,
        "Ensemble means and standard errors; 'quasi' is flat over (v1, w2, v2, w3), bit 1 meaning +1.");

    // ---- retrodiction ----
    m.def("weak_value",
          [](const Mat& a, const Mat& rho_prime, const Vec& f_prime) {
              return weak_value(a, make_context(rho_prime, f_prime));
          },
          py::arg("a"), py::arg("rho_prime"), py::arg("f_prime"));
    m.def(
        "gamma_weak",
        [](const std::vector<Mat>& chain, const Mat& rho_prime, const Vec& f_prime, const std::string& method) {
            ObservableChain c(chain);
            auto ctx = make_context(rho_prime, f_prime);
            MemoryMeter meter;
            double value;
            if (method == "direct") value = gamma_weak_direct(c, ctx, &meter);
            else if (method == "factored") value = gamma_weak_factored(c, ctx, &meter);
            else throw ConfigError("method must be 'direct' or 'factored'");
            return py::make_tuple(value, meter.peak());
        },
        py::arg("chain"), py::arg("rho_prime"), py::arg("f_prime"), py::arg("method") = "factored",
        "Weak value of K...A + A...K and the peak number of stored entries.");

    // ---- decomposition ----
    m.def(
        "decompose",
        [](const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
            auto r = decompose(rho, w, v, ev, t);
            py::dict d;
            d["rho_prime"] = r.rho_prime;
            d["coefficients"] = r.coefficients;
            d["overlaps"] = r.overlaps;
            d["omitted_pairs"] = r.omitted_pairs;
            d["reconstruction"] = r.reconstruction;
            d["reconstruction_error"] = r.reconstruction_error;
            d["trace_error"] = r.trace_error;
            d["hermiticity_defect"] = r.hermiticity_defect;
            return d;
        },
        py::arg("rho"), py::arg("w"), py::arg("v"), py::arg("evolver"), py::arg("t"));

    // ---- experiments ----
    m.def("experiment_catalog", &experiment_catalog);
    m.def(
        "_run_experiment_json",
        [](const std::string& config) {
            ExperimentConfig c = config_from_json(nlohmann::json::parse(config));
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(c);
            }
            return to_json(r).dump();
        },
        py::arg("config"));
}

#include "otoclab/experiments.hpp"

#include <Eigen/Core>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <algorithm>
#include <sstream>
#include <unistd.h>

#include "otoclab/brownian.hpp"
#include "otoclab/decomp.hpp"
#include "otoclab/quasiprob.hpp"
#include "otoclab/retrodict.hpp"
#include "otoclab/stats.hpp"
#include "otoclab/weakmeas.hpp"

namespace otoclab {

using nlohmann::json;

const std::vector<std::string>& experiment_catalog() {
    static const std::vector<std::string> names{
        "otoc-series",        "quasiprob-series", "work-distribution", "brownian-ensemble", "weakmeas-inference",
        "retrodict-benchmark", "decomp-report",   "toc-series",        "kfold-series",      "regulated-series"};
    return names;
}

// ---- config ----------------------------------------------------------------

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    for (const auto& [key, val] : j.items()) {
        if (key == "experiment") c.experiment = get_as<std::string>(val, key);
        else if (key == "n") c.n = get_as<int>(val, key);
        else if (key == "j") c.j = get_as<double>(val, key);
        else if (key == "h-field") c.h_field = get_as<double>(val, key);
        else if (key == "g-field") c.g_field = get_as<double>(val, key);
        else if (key == "state") c.state = get_as<std::string>(val, key);
        else if (key == "w") c.w = get_as<std::string>(val, key);
        else if (key == "v") c.v = get_as<std::string>(val, key);
        else if (key == "t-max") c.t_max = get_as<double>(val, key);
        else if (key == "t-step") c.t_step = get_as<double>(val, key);
        else if (key == "seed") c.seed = get_as<std::uint64_t>(val, key);
        else if (key == "shots") c.shots = get_as<std::uint64_t>(val, key);
        else if (key == "format") c.format = get_as<std::string>(val, key);
        else if (key == "out") c.out = get_as<std::string>(val, key);
        else if (key == "trajectories") c.trajectories = get_as<long>(val, key);
        else if (key == "dt") c.dt = get_as<double>(val, key);
        else if (key == "khat") c.khat = get_as<int>(val, key);
        else if (key == "phis") c.phis = get_as<std::vector<double>>(val, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    if (c.n) j["n"] = *c.n;
    j["j"] = c.j;
    j["h-field"] = c.h_field;
    j["g-field"] = c.g_field;
    j["state"] = c.state;
    j["w"] = c.w;
    if (c.v) j["v"] = *c.v;
    if (c.t_max) j["t-max"] = *c.t_max;
    if (c.t_step) j["t-step"] = *c.t_step;
    j["seed"] = c.seed;
    j["shots"] = c.shots;
    j["format"] = c.format;
    j["out"] = c.out;
    if (c.trajectories) j["trajectories"] = *c.trajectories;
    if (c.dt) j["dt"] = *c.dt;
    if (c.khat) j["khat"] = *c.khat;
    if (c.phis) j["phis"] = *c.phis;
    return j;
}

namespace {

struct Defaults {
    int n;
    double t_max;
    double t_step;
    std::string v;  // empty: last site
};

Defaults defaults_for(const std::string& e) {
    if (e == "otoc-series" || e == "quasiprob-series") return {6, 20.0, 0.1, ""};
    if (e == "work-distribution") return {6, 5.0, 5.0, ""};
    if (e == "brownian-ensemble") return {5, 4.0, 0.05, "2:z"};
    if (e == "weakmeas-inference") return {2, 1.0, 1.0, ""};
    if (e == "retrodict-benchmark") return {6, 1.0, 1.0, ""};
    if (e == "decomp-report") return {2, 5.0, 0.5, ""};
    if (e == "kfold-series") return {3, 10.0, 0.1, ""};
    return {6, 10.0, 0.1, ""};  // toc-series, regulated-series
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse " + what + " from '" + s + "'");
    }
}

}  // namespace

ExperimentConfig resolve(const ExperimentConfig& in) {
    const auto& cat = experiment_catalog();
    if (std::find(cat.begin(), cat.end(), in.experiment) == cat.end())
        throw ConfigError("unknown experiment '" + in.experiment + "'");
    ExperimentConfig c = in;
    Defaults d = defaults_for(c.experiment);
    if (!c.n) c.n = d.n;
    if (!c.t_max) c.t_max = d.t_max;
    if (!c.t_step) c.t_step = d.t_step;
    if (!c.v) c.v = d.v.empty() ? std::to_string(*c.n) + ":z" : d.v;
    if (c.experiment == "brownian-ensemble") {
        if (!c.trajectories) c.trajectories = 200;
        if (!c.dt) c.dt = 0.005;
    }
    if (c.experiment == "kfold-series" && !c.khat) c.khat = 3;
    if (c.experiment == "weakmeas-inference" && !c.phis) c.phis = std::vector<double>{0.05, 0.1, 0.15, 0.2};

    if (*c.n < 2 || *c.n > 12) throw ConfigError("n must lie in [2, 12]");
    if (!(*c.t_max >= 0) || !std::isfinite(*c.t_max)) throw ConfigError("t-max must be finite and nonnegative");
    if (!(*c.t_step > 0) || !std::isfinite(*c.t_step)) throw ConfigError("t-step must be positive");
    if (c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
    if (!std::isfinite(c.j) || !std::isfinite(c.h_field) || !std::isfinite(c.g_field))
        throw ConfigError("couplings must be finite");
    parse_local_observable(c.w, *c.n);
    parse_local_observable(*c.v, *c.n);
    if (c.state != "infinite-temp" && c.state != "plus-x" && c.state.rfind("thermal:", 0) != 0 &&
        c.state.rfind("haar:", 0) != 0)
        throw ConfigError("state must be infinite-temp, thermal:T, haar:seed or plus-x");
    return c;
}

LocalObservable parse_local_observable(const std::string& s, int n) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("observable '" + s + "' is not of the form site:axis");
    LocalObservable o;
    double site = parse_double(s.substr(0, colon), "site");
    if (site != std::floor(site) || site < 1 || site > n)
        throw ConfigError("observable site in '" + s + "' must be an integer in [1, n]");
    o.site = static_cast<int>(site);
    o.axis = parse_axis(s.substr(colon + 1));
    return o;
}

Mat parse_state(const std::string& s, const Mat& hamiltonian, int n) {
    const long d = 1L << n;
    if (s == "infinite-temp") return Mat::Identity(d, d) / static_cast<double>(d);
    if (s == "plus-x") return product_plus_x_state(n);
    if (s.rfind("thermal:", 0) == 0) {
        double temp = parse_double(s.substr(8), "temperature");
        if (!(temp > 0)) throw ConfigError("temperature must be positive");
        return thermal_state(hamiltonian, temp);
    }
    if (s.rfind("haar:", 0) == 0) {
        double seed = parse_double(s.substr(5), "Haar seed");
        if (seed < 0 || seed != std::floor(seed)) throw ConfigError("Haar seed must be a nonnegative integer");
        return ket_to_density(haar_random_state(d, static_cast<std::uint64_t>(seed)));
    }
    throw ConfigError("state must be infinite-temp, thermal:T, haar:seed or plus-x");
}

std::string abcd_label(double v1, double w2, double v2, double w3) {
    auto bit = [](double x) { return x < 0 ? '1' : '0'; };
    return {bit(w3), bit(v2), bit(w2), bit(v1)};
}

// ---- tables ----------------------------------------------------------------

Column& Table::add(const std::string& name, bool is_text) {
    for (const auto& c : columns)
        if (c.name == name) throw ConfigError("duplicate column " + name);
    columns.push_back(Column{name, {}, {}, is_text});
    return columns.back();
}

Column& Table::at(const std::string& name) {
    for (auto& c : columns)
        if (c.name == name) return c;
    throw ConfigError("no column " + name);
}

const Column& Table::at(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return c;
    throw ConfigError("no column " + name);
}

// ---- experiments -----------------------------------------------------------

namespace {

struct System {
    int n;
    Mat h;
    Mat rho;
    Mat w;
    Mat v;
};

System build_system(const ExperimentConfig& c) {
    System s;
    s.n = *c.n;
    s.h = ising_hamiltonian({s.n, c.j, c.h_field, c.g_field});
    s.rho = parse_state(c.state, s.h, s.n);
    s.w = site_pauli(s.n, parse_local_observable(c.w, s.n));
    s.v = site_pauli(s.n, parse_local_observable(*c.v, s.n));
    return s;
}

void require_fine(const ExperimentConfig& c) {
    if (*c.n > 6) throw ConfigError(c.experiment + " needs fine-grained bases and is limited to n <= 6");
}

// The sixteen (v1, w2, v2, w3) tuples in abcd label order.
struct Tuple {
    double v1, w2, v2, w3;
    std::string label;
};

std::vector<Tuple> tuples() {
    std::vector<Tuple> out;
    for (int bits = 0; bits < 16; ++bits) {
        double w3 = bits & 8 ? -1 : 1, v2 = bits & 4 ? -1 : 1, w2 = bits & 2 ? -1 : 1, v1 = bits & 1 ? -1 : 1;
        out.push_back({v1, w2, v2, w3, abcd_label(v1, w2, v2, w3)});
    }
    return out;
}

void add_complex(Table& t, const std::string& name, const std::vector<cplx>& z) {
    Column& re = t.add("re_" + name);
    for (cplx x : z) re.numbers.push_back(x.real());
    Column& im = t.add("im_" + name);
    for (cplx x : z) im.numbers.push_back(x.imag());
}

void add_real(Table& t, const std::string& name, const std::vector<double>& x) { t.add(name).numbers = x; }

ExperimentResult otoc_or_quasi_series(const ExperimentConfig& c, bool with_quasi) {
    System s = build_system(c);
    Evolver ev(s.h);
    CoarseSeriesEngine engine(s.rho, s.w, s.v, ev);
    std::vector<double> times = time_grid(*c.t_max, *c.t_step);
    auto tups = tuples();
    std::vector<cplx> f;
    std::vector<std::vector<cplx>> curves(16);
    double max_im = 0.0;
    for (double t : times) {
        auto p = engine.at(t);
        f.push_back(p.otoc);
        if (with_quasi)
            for (int k = 0; k < 16; ++k) {
                cplx a = p.quasi.value({tups[k].v1, tups[k].w2, tups[k].v2, tups[k].w3});
                curves[k].push_back(a);
                max_im = std::max(max_im, std::abs(a.imag()));
            }
    }
    ExperimentResult r;
    r.config = c;
    add_real(r.table, "t", times);
    if (with_quasi) {
        for (int k = 0; k < 16; ++k) add_complex(r.table, tups[k].label, curves[k]);
        r.summary["max_abs_imag"] = max_im;
    } else {
        add_complex(r.table, "F", f);
    }
    Onset onset = scrambling_onset({times, f}, 0.9);
    r.summary["onset_found"] = onset.found;
    if (onset.found) r.summary["onset_time"] = onset.time;
    return r;
}

ExperimentResult work_experiment(const ExperimentConfig& c) {
    System s = build_system(c);
    Evolver ev(s.h);
    WorkDistribution wd = work_distribution(coarse_quasiprob(s.rho, s.w, s.v, ev, *c.t_max));
    ExperimentResult r;
    r.config = c;
    std::vector<cplx> vals;
    Column& w = r.table.add("W");
    for (double x : wd.w) w.numbers.push_back(x);
    Column& wp = r.table.add("W_prime");
    for (double x : wd.w_prime) wp.numbers.push_back(x);
    add_complex(r.table, "P", wd.values);
    r.summary["t"] = *c.t_max;
    r.summary["re_sum"] = wd.sum().real();
    r.summary["re_work_moment"] = work_moment(wd).real();
    r.summary["re_otoc"] = otoc(s.rho, s.w, s.v, ev, *c.t_max).real();
    return r;
}

ExperimentResult brownian_experiment(const ExperimentConfig& c) {
    System s = build_system(c);
    BrownianConfig bc;
    bc.n = s.n;
    bc.dt = *c.dt;
    bc.trajectories = *c.trajectories;
    bc.seed = c.seed;
    bc.steps = std::lround(*c.t_max / bc.dt);
    bc.sample_every = std::max(1L, std::lround(*c.t_step / bc.dt));
    EnsembleResult e = ensemble_averages(bc, s.rho, s.w, s.v);
    ExperimentResult r;
    r.config = c;
    add_real(r.table, "t", e.times);
    for (const char* name : {"F", "G", "q1", "f12", "autocorrelator"}) {
        const auto& es = e.series.at(name);
        add_complex(r.table, name, es.mean);
        add_real(r.table, std::string("se_") + name, es.standard_error);
    }
    for (const auto& tp : tuples()) {
        // ensemble layout: flat index bits (v1, w2, v2, w3) with 1 for +1
        long flat = (tp.v1 > 0 ? 8 : 0) | (tp.w2 > 0 ? 4 : 0) | (tp.v2 > 0 ? 2 : 0) | (tp.w3 > 0 ? 1 : 0);
        add_complex(r.table, tp.label, e.quasi[flat].mean);
        add_real(r.table, "se_" + tp.label, e.quasi[flat].standard_error);
    }
    r.summary["max_unitarity_defect"] = e.max_unitarity_defect;
    r.summary["has_standard_error"] = e.has_standard_error;
    r.summary["steps"] = bc.steps;
    r.summary["sample_every"] = bc.sample_every;
    return r;
}

ExperimentResult weakmeas_experiment(const ExperimentConfig& c) {
    System s = build_system(c);
    Evolver ev(s.h);
    const double t = *c.t_max;
    auto runs = run_inference_batch(s.rho, s.w, s.v, ev, t, *c.phis, c.shots, c.seed);
    InferenceResult inf = infer_coarse_quasiprob(runs, spectral_decomposition(s.w), spectral_decomposition(s.v));
    QuasiDistribution direct = coarse_quasiprob(s.rho, s.w, s.v, ev, t);
    ExperimentResult r;
    r.config = c;
    Column& lab = r.table.add("label", true);
    std::vector<cplx> got, want;
    std::vector<double> sre, sim;
    double worst = 0.0;
    for (const auto& tp : tuples()) {
        std::vector<double> e{tp.v1, tp.w2, tp.v2, tp.w3};
        lab.text.push_back(tp.label);
        cplx a = inf.quasi.value(e), b = direct.value(e);
        got.push_back(a);
        want.push_back(b);
        std::vector<long> at;
        for (long a = 0; a < 4; ++a) {
            const auto& vals = inf.quasi.axes[a].values;
            at.push_back(vals[0] == e[a] ? 0L : 1L);
        }
        long flat = inf.quasi.flat_index(at);
        sre.push_back(inf.sigma_re[flat]);
        sim.push_back(inf.sigma_im[flat]);
        worst = std::max(worst, std::abs(a - b));
    }
    add_complex(r.table, "inferred", got);
    add_complex(r.table, "direct", want);
    add_real(r.table, "sigma_re", sre);
    add_real(r.table, "sigma_im", sim);
    r.summary["t"] = t;
    r.summary["max_abs_error"] = worst;
    r.summary["max_condition"] = inf.max_condition;
    r.summary["runs"] = runs.size();
    return r;
}

ExperimentResult retrodict_experiment(const ExperimentConfig& c) {
    if (*c.n < 2 || *c.n > 6) throw ConfigError("retrodict-benchmark uses chains on 2 to 6 qubits");
    System s = build_system(c);
    Evolver ev(s.h);
    const long d = 1L << s.n;
    Vec f = Vec::Zero(d);
    f(0) = 1.0;
    RetrodictionContext ctx = make_context(s.rho, ev, 0.0, *c.t_max, f);
    ExperimentResult r;
    r.config = c;
    std::vector<double> ks, g1, g2, diff, nnz, peak;
    for (int k = 2; k <= s.n; ++k) {
        std::vector<Mat> ops;
        for (int site = 1; site <= k; ++site)
            ops.push_back((site_pauli(s.n, site, PauliAxis::x) + site_pauli(s.n, site, PauliAxis::z)) / std::sqrt(2.0));
        ObservableChain chain(ops);
        MemoryMeter m1, m2;
        double a = gamma_weak_direct(chain, ctx, &m1);
        double b = gamma_weak_factored(chain, ctx, &m2);
        ks.push_back(k);
        g1.push_back(a);
        g2.push_back(b);
        diff.push_back(std::abs(a - b));
        nnz.push_back(static_cast<double>(m1.peak()));
        peak.push_back(static_cast<double>(m2.peak()));
    }
    add_real(r.table, "k", ks);
    add_real(r.table, "gamma_method1", g1);
    add_real(r.table, "gamma_method2", g2);
    add_real(r.table, "abs_difference", diff);
    add_real(r.table, "method1_nonzeros", nnz);
    add_real(r.table, "method2_peak_entries", peak);
    if (ks.size() >= 2) {
        LinearFit fit = linear_regression(ks, peak);
        r.summary["method2_slope"] = fit.slope;
        r.summary["method2_intercept"] = fit.intercept;
    }
    r.summary["conditioning_probability"] = ctx.probability;
    return r;
}

ExperimentResult decomp_experiment(const ExperimentConfig& c) {
    require_fine(c);
    System s = build_system(c);
    Evolver ev(s.h);
    std::vector<double> times = time_grid(*c.t_max, *c.t_step);
    ExperimentResult r;
    r.config = c;
    std::vector<double> omitted, recon, trace, herm, mean, mn, mx, near;
    for (double t : times) {
        DecompositionReport rep = decompose(s.rho, s.w, s.v, ev, t);
        OverlapSnapshot snap = summarize_overlaps(rep.overlaps, t);
        omitted.push_back(static_cast<double>(rep.omitted_pairs.size()));
        recon.push_back(rep.reconstruction_error);
        trace.push_back(rep.trace_error);
        herm.push_back(rep.hermiticity_defect);
        mean.push_back(snap.mean);
        mn.push_back(snap.min);
        mx.push_back(snap.max);
        near.push_back(snap.fraction_near_unbiased);
    }
    add_real(r.table, "t", times);
    add_real(r.table, "omitted_pairs", omitted);
    add_real(r.table, "reconstruction_error", recon);
    add_real(r.table, "trace_error", trace);
    add_real(r.table, "hermiticity_defect", herm);
    add_real(r.table, "overlap_mean", mean);
    add_real(r.table, "overlap_min", mn);
    add_real(r.table, "overlap_max", mx);
    add_real(r.table, "fraction_near_unbiased", near);
    r.summary["max_reconstruction_error"] = recon.empty() ? 0.0 : *std::max_element(recon.begin(), recon.end());
    return r;
}

ExperimentResult toc_experiment(const ExperimentConfig& c) {
    System s = build_system(c);
    Evolver ev(s.h);
    std::vector<double> times = time_grid(*c.t_max, *c.t_step);
    std::vector<cplx> toc, moment;
    std::vector<double> max_im;
    for (double t : times) {
        TocResult tr = toc_and_toc_quasiprob(s.rho, s.w, s.v, ev, t);
        toc.push_back(tr.toc);
        moment.push_back(toc_moment(tr.work));
        double m = 0.0;
        for (cplx x : tr.quasi.values) m = std::max(m, std::abs(x.imag()));
        max_im.push_back(m);
    }
    ExperimentResult r;
    r.config = c;
    add_real(r.table, "t", times);
    add_complex(r.table, "toc", toc);
    add_complex(r.table, "moment", moment);
    add_real(r.table, "max_abs_imag_quasi", max_im);
    return r;
}

ExperimentResult kfold_experiment(const ExperimentConfig& c) {
    System s = build_system(c);
    Evolver ev(s.h);
    std::vector<double> times = time_grid(*c.t_max, *c.t_step);
    std::vector<cplx> val, moment;
    for (double t : times) {
        KfoldResult k = kfold_otoc_and_quasiprob(s.rho, s.w, s.v, ev, t, *c.khat);
        val.push_back(k.value);
        moment.push_back(kfold_moment(k.quasi));
    }
    ExperimentResult r;
    r.config = c;
    add_real(r.table, "t", times);
    add_complex(r.table, "F" + std::to_string(*c.khat), val);
    add_complex(r.table, "moment", moment);
    return r;
}

ExperimentResult regulated_experiment(const ExperimentConfig& c) {
    double temp;
    if (c.state == "infinite-temp") temp = kInfiniteTemperature;
    else if (c.state.rfind("thermal:", 0) == 0) temp = parse_double(c.state.substr(8), "temperature");
    else throw ConfigError("regulated-series needs state infinite-temp or thermal:T");
    if (!(temp > 0)) throw ConfigError("temperature must be positive");
    System s = build_system(c);
    Evolver ev(s.h);
    std::vector<double> times = time_grid(*c.t_max, *c.t_step);
    auto tups = tuples();
    std::vector<cplx> f;
    std::vector<std::vector<cplx>> curves(16);
    for (double t : times) {
        RegulatedResult rr = regulated_quasiprob_and_otoc(ev, temp, s.w, s.v, t);
        f.push_back(rr.f_reg);
        for (int k = 0; k < 16; ++k) curves[k].push_back(rr.quasi.value({tups[k].v1, tups[k].w2, tups[k].v2, tups[k].w3}));
    }
    ExperimentResult r;
    r.config = c;
    add_real(r.table, "t", times);
    add_complex(r.table, "F_reg", f);
    for (int k = 0; k < 16; ++k) add_complex(r.table, tups[k].label, curves[k]);
    return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentConfig c = resolve(config);
    ExperimentResult r;
    const std::string& e = c.experiment;
    if (e == "otoc-series") r = otoc_or_quasi_series(c, false);
    else if (e == "quasiprob-series") r = otoc_or_quasi_series(c, true);
    else if (e == "work-distribution") r = work_experiment(c);
    else if (e == "brownian-ensemble") r = brownian_experiment(c);
    else if (e == "weakmeas-inference") r = weakmeas_experiment(c);
    else if (e == "retrodict-benchmark") r = retrodict_experiment(c);
    else if (e == "decomp-report") r = decomp_experiment(c);
    else if (e == "toc-series") r = toc_experiment(c);
    else if (e == "kfold-series") r = kfold_experiment(c);
    else r = regulated_experiment(c);
    r.summary["experiment"] = e;
    r.summary["rows"] = r.table.rows();
    return r;
}

// ---- serialization ---------------------------------------------------------

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string to_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c].name;
    os << "\n";
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            const Column& col = t.columns[c];
            os << (c ? "," : "") << (col.is_text ? col.text[i] : format_number(col.numbers[i]));
        }
        os << "\n";
    }
    return os.str();
}

json to_json(const ExperimentResult& r) {
    json j;
    j["metadata"] = {{"config", config_to_json(r.config)},
                     {"version", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"seed", r.config.seed}};
    j["summary"] = r.summary;
    json cols = json::array();
    for (const auto& c : r.table.columns) {
        json col;
        col["name"] = c.name;
        if (c.is_text) col["text"] = c.text;
        else col["values"] = c.numbers;
        cols.push_back(col);
    }
    j["columns"] = cols;
    return j;
}

Table table_from_json(const json& j) {
    Table t;
    for (const auto& col : j.at("columns")) {
        bool text = col.contains("text");
        Column& c = t.add(col.at("name").get<std::string>(), text);
        if (text) c.text = col.at("text").get<std::vector<std::string>>();
        else c.numbers = col.at("values").get<std::vector<double>>();
    }
    return t;
}

void write_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write output '" + path + "': " + std::strerror(errno));
        f << content;
        f.flush();
        if (!f) {
            std::remove(tmp.c_str());
            throw ConfigError("failed writing output '" + path + "'");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::string why = std::strerror(errno);
        std::remove(tmp.c_str());
        throw ConfigError("cannot move output into place at '" + path + "': " + why);
    }
}

std::string emit(const ExperimentResult& r) {
    std::string text;
    if (r.config.format == "json") {
        text = to_json(r).dump(2) + "\n";
    } else {
        text = to_csv(r.table);
    }
    if (!r.config.out.empty()) write_atomic(r.config.out, text);
    return text;
}

}  // namespace otoclab

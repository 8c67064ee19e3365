// otoclab: run a catalog experiment and emit CSV or JSON.
//
//   otoclab quasiprob-series --n 10 --w 1:z --v 10:z --t-max 20 --out q.csv
//   otoclab brownian-ensemble --config run.json --seed 7
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "otoclab/experiments.hpp"

using namespace otoclab;

namespace {

struct Flags {
    std::string config;
    int n = 0;
    double j = 0, h_field = 0, g_field = 0, t_max = 0, t_step = 0, dt = 0;
    std::string state, w, v, format, out, phis;
    std::uint64_t seed = 0, shots = 0;
    long trajectories = 0;
    int khat = 0;
    bool quiet = false;
    std::map<std::string, CLI::Option*> opts;
};

void add_flags(CLI::App* sub, Flags& f) {
    f.opts["config"] = sub->add_option("--config", f.config, "JSON config file; flags override its keys");
    f.opts["n"] = sub->add_option("--n", f.n, "number of sites");
    f.opts["j"] = sub->add_option("--j", f.j, "Ising coupling J");
    f.opts["h-field"] = sub->add_option("--h-field", f.h_field, "longitudinal field h");
    f.opts["g-field"] = sub->add_option("--g-field", f.g_field, "transverse field g");
    f.opts["state"] = sub->add_option("--state", f.state, "infinite-temp, thermal:T, haar:seed or plus-x");
    f.opts["w"] = sub->add_option("--w", f.w, "W as site:axis");
    f.opts["v"] = sub->add_option("--v", f.v, "V as site:axis");
    f.opts["t-max"] = sub->add_option("--t-max", f.t_max, "last time (evaluation time for single-time runs)");
    f.opts["t-step"] = sub->add_option("--t-step", f.t_step, "time grid spacing");
    f.opts["seed"] = sub->add_option("--seed", f.seed, "master RNG seed");
    f.opts["shots"] = sub->add_option("--shots", f.shots, "weak-measurement shots per run, 0 for exact");
    f.opts["format"] = sub->add_option("--format", f.format, "csv or json");
    f.opts["out"] = sub->add_option("--out", f.out, "output path; stdout when omitted");
    f.opts["trajectories"] = sub->add_option("--trajectories", f.trajectories, "Brownian trajectories");
    f.opts["dt"] = sub->add_option("--dt", f.dt, "Brownian time step");
    f.opts["khat"] = sub->add_option("--khat", f.khat, "k-fold order");
    f.opts["phis"] = sub->add_option("--phis", f.phis, "comma-separated weak coupling strengths");
    sub->add_flag("--quiet", f.quiet, "do not print the run summary");
}

std::vector<double> split_numbers(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse coupling strength '" + item + "'");
        }
    }
    return out;
}

ExperimentConfig build_config(const std::string& experiment, const Flags& f) {
    ExperimentConfig c;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError("cannot read config file '" + f.config + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        c = config_from_json(j);
        if (!c.experiment.empty() && c.experiment != experiment)
            throw ConfigError("config file is for experiment '" + c.experiment + "'");
    }
    c.experiment = experiment;
    auto given = [&](const char* k) { return f.opts.at(k)->count() > 0; };
    if (given("n")) c.n = f.n;
    if (given("j")) c.j = f.j;
    if (given("h-field")) c.h_field = f.h_field;
    if (given("g-field")) c.g_field = f.g_field;
    if (given("state")) c.state = f.state;
    if (given("w")) c.w = f.w;
    if (given("v")) c.v = f.v;
    if (given("t-max")) c.t_max = f.t_max;
    if (given("t-step")) c.t_step = f.t_step;
    if (given("seed")) c.seed = f.seed;
    if (given("shots")) c.shots = f.shots;
    if (given("format")) c.format = f.format;
    if (given("out")) c.out = f.out;
    if (given("trajectories")) c.trajectories = f.trajectories;
    if (given("dt")) c.dt = f.dt;
    if (given("khat")) c.khat = f.khat;
    if (given("phis")) c.phis = split_numbers(f.phis);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OTOC and quasiprobability experiments"};
    app.require_subcommand(1);
    Flags flags;
    std::map<std::string, CLI::App*> subs;
    for (const auto& name : experiment_catalog()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        add_flags(sub, flags);
        subs[name] = sub;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (const auto& [name, sub] : subs) {
            if (!sub->parsed()) continue;
            // the option map holds the last registered subcommand's options
            for (auto& [key, opt] : flags.opts) opt = sub->get_option("--" + key);
            ExperimentResult r = run_experiment(build_config(name, flags));
            std::string text = emit(r);
            if (r.config.out.empty()) std::cout << text;
            else if (!flags.quiet) std::cerr << r.summary.dump() << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

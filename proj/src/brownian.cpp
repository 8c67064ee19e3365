#include "otoclab/brownian.hpp"

#include <cmath>

#include "otoclab/stats.hpp"

namespace otoclab {

void validate(const BrownianConfig& c) {
    if (c.n < 2) throw ConfigError("Brownian circuit needs at least 2 sites");
    if (c.n > 8) throw ConfigError("Brownian circuit is limited to 8 sites for dense simulation");
    if (!(c.dt > 0) || c.dt > 0.01) throw ConfigError("Brownian time step must lie in (0, 0.01]");
    if (c.steps < 0) throw ConfigError("number of steps must be nonnegative");
    if (c.trajectories < 1) throw ConfigError("need at least one trajectory");
    if (c.sample_every < 1) throw ConfigError("sample interval must be >= 1 step");
}

BrownianSampler::BrownianSampler(int n) : dim_(1L << n), coupling_(std::sqrt(1.0 / (8.0 * (n - 1)))) {
    if (n < 2 || n > 8) throw ConfigError("Brownian sampler supports 2 to 8 sites");
    // single-site action on bit b: flip and phase for a = 1, x, y, z
    auto single = [](int a, int b, bool& flips) -> cplx {
        switch (a) {
            case 0: flips = false; return 1.0;
            case 1: flips = true; return 1.0;
            case 2: flips = true; return b ? -I : I;
            default: flips = false; return b ? -1.0 : 1.0;
        }
    };
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    PauliString ps{0, Vec(dim_)};
                    long mi = 1L << (n - i), mj = 1L << (n - j);
                    for (long s = 0; s < dim_; ++s) {
                        bool fi = false, fj = false;
                        cplx ph = single(a, (s & mi) ? 1 : 0, fi) * single(b, (s & mj) ? 1 : 0, fj);
                        ps.phase(s) = ph;
                        if (s == 0) ps.flip = (fi ? mi : 0) | (fj ? mj : 0);
                    }
                    strings_.push_back(std::move(ps));
                }
}

Mat BrownianSampler::sample(double dt, std::mt19937_64& rng) const {
    std::normal_distribution<double> g(0.0, std::sqrt(dt));
    Mat db = Mat::Zero(dim_, dim_);
    for (const auto& ps : strings_) {
        double x = coupling_ * g(rng);
        for (long s = 0; s < dim_; ++s) db(s ^ ps.flip, s) += x * ps.phase(s);
    }
    return db;
}

Mat sample_increment(const BrownianConfig& config, std::mt19937_64& rng) {
    validate(config);
    return BrownianSampler(config.n).sample(config.dt, rng);
}

Mat step_unitary(const Mat& u, const Mat& db) {
    return expm_scaled(db, -I) * u;
}

std::vector<double> sample_times(const BrownianConfig& c) {
    std::vector<double> ts;
    for (long s = 0; s <= c.steps; s += c.sample_every) ts.push_back(static_cast<double>(s) * c.dt);
    return ts;
}

double run_trajectories(const BrownianConfig& c, const TrajectoryObserver& observer) {
    validate(c);
    BrownianSampler sampler(c.n);
    const long d = sampler.dim();
    double worst = 0.0;
    for (long k = 0; k < c.trajectories; ++k) {
        std::mt19937_64 rng(substream_seed(c.seed, static_cast<std::uint64_t>(k)));
        Mat u = Mat::Identity(d, d);
        long sample = 0;
        observer(k, sample++, 0.0, u);
        for (long s = 1; s <= c.steps; ++s) {
            u = step_unitary(u, sampler.sample(c.dt, rng));
            if (s % c.sample_every == 0) observer(k, sample++, static_cast<double>(s) * c.dt, u);
        }
        double defect = max_abs(u.adjoint() * u - Mat::Identity(d, d));
        worst = std::max(worst, defect);
        if (defect > 1e-8) throw NumericError("Brownian trajectory lost unitarity");
    }
    return worst;
}

EnsembleResult ensemble_averages(const BrownianConfig& c, const Mat& rho, const Mat& w, const Mat& v) {
    validate(c);
    const long d = 1L << c.n;
    if (rho.rows() != d || w.rows() != d || v.rows() != d) throw ConfigError("operator dimensions do not match 2^N");
    Mat id = Mat::Identity(d, d);
    if (max_abs(w * w - id) > 1e-12 || max_abs(v * v - id) > 1e-12)
        throw ConfigError("Brownian ensemble averages need W and V that square to the identity");
    EnsembleResult res;
    res.times = sample_times(c);
    const long nt = static_cast<long>(res.times.size());
    const std::vector<std::string> names{"F", "G", "q1", "f12", "autocorrelator"};
    std::map<std::string, std::vector<ComplexRunningStats>> acc;
    for (const auto& nm : names) acc[nm].resize(nt);
    std::vector<std::vector<ComplexRunningStats>> qacc(16, std::vector<ComplexRunningStats>(nt));
    Spectral pm{{-1.0, 1.0}, {}};

    res.max_unitarity_defect = run_trajectories(c, [&](long, long sample, double, const Mat& u) {
        Mat wt = u.adjoint() * w * u;
        auto cor = pauli_correlators_of(rho, wt, v);
        acc["F"][sample].add(cor[7]);
        acc["G"][sample].add(cor[3]);
        acc["q1"][sample].add(cor[1]);
        acc["f12"][sample].add(cor[5]);
        acc["autocorrelator"][sample].add((rho * wt * w).trace());
        for (long f = 0; f < 16; ++f) {
            double v1 = pm.values[(f >> 3) & 1], w2 = pm.values[(f >> 2) & 1];
            double v2 = pm.values[(f >> 1) & 1], w3 = pm.values[f & 1];
            qacc[f][sample].add(quasi_from_correlators(cor, v1, w2, v2, w3));
        }
    });

    auto finish = [&](const std::string& name, const std::vector<ComplexRunningStats>& st) {
        EnsembleSeries es;
        es.name = name;
        es.times = res.times;
        es.trajectories_used = c.trajectories;
        for (const auto& s : st) {
            es.mean.push_back(s.mean());
            es.se_re.push_back(s.se_re());
            es.se_im.push_back(s.se_im());
            es.standard_error.push_back(std::hypot(s.se_re(), s.se_im()));
        }
        return es;
    };
    for (const auto& nm : names) res.series[nm] = finish(nm, acc[nm]);
    for (long f = 0; f < 16; ++f) res.quasi.push_back(finish("A" + std::to_string(f), qacc[f]));
    res.has_standard_error = c.trajectories >= 2;
    return res;
}

double analytic_avg_quasiprob(double w2, double w3, double v1, double v2, double f_value) {
    return ((1 + w2 * w3 + v1 * v2) + w2 * w3 * v1 * v2 * f_value) / 16.0;
}

cplx general_state_avg(const Mat& rho, const Mat& w, const Mat& v, double t, cplx f12, cplx f_value, double v1,
                       double w2, double v2, double w3) {
    double decay = std::exp(-2.0 * t);
    auto ex = [&](const Mat& x) { return (rho * x).trace(); };
    std::vector<cplx> c{rho.trace(),          decay * ex(w),     ex(v), decay * ex(w * v), decay * ex(v * w),
                        f12,                  decay * ex(v * w * v), f_value};
    return quasi_from_correlators(c, v1, w2, v2, w3);
}

double phenomenological_otoc(double t, double c1, double c2) {
    if (!(c1 > 0) || !(c2 > 0)) throw ConfigError("phenomenological OTOC needs c1 > 0 and c2 > 0");
    return std::pow((1 + c1) / (1 + c1 * std::exp(3 * t)), c2);
}

}  // namespace otoclab

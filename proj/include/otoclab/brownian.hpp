#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "otoclab/quasiprob.hpp"

namespace otoclab {

struct BrownianConfig {
    int n = 5;
    double dt = 0.005;
    long steps = 800;
    long trajectories = 200;
    std::uint64_t seed = 1;
    long sample_every = 10;  // record observables every this many steps
};

void validate(const BrownianConfig& config);

// Draws dB = c sum_{i<j} sum_{a,b} s_i^a s_j^b dB_ij^ab with c^2 = 1/(8(N-1)),
// a, b running over {1, x, y, z} and each dB_ij^ab ~ Normal(0, dt).
class BrownianSampler {
public:
    explicit BrownianSampler(int n);
    Mat sample(double dt, std::mt19937_64& rng) const;
    long terms() const { return static_cast<long>(strings_.size()); }
    long dim() const { return dim_; }

private:
    struct PauliString {
        long flip;
        Vec phase;  // column s maps to row s ^ flip with this factor
    };
    long dim_;
    double coupling_;
    std::vector<PauliString> strings_;
};

Mat sample_increment(const BrownianConfig& config, std::mt19937_64& rng);

// exp(-i dB) U
Mat step_unitary(const Mat& u, const Mat& db);

// Called at every recorded time with the trajectory's current U(t).
using TrajectoryObserver = std::function<void(long trajectory, long sample, double t, const Mat& u)>;

// Runs all trajectories, trajectory k on substream k of the seed. Returns the
// largest unitarity defect |U^dagger U - 1|_max seen at the end of a run.
double run_trajectories(const BrownianConfig& config, const TrajectoryObserver& observer);
std::vector<double> sample_times(const BrownianConfig& config);

struct EnsembleSeries {
    std::string name;
    std::vector<double> times;
    std::vector<cplx> mean;
    std::vector<double> se_re;
    std::vector<double> se_im;
    std::vector<double> standard_error;  // hypot(se_re, se_im)
    long trajectories_used = 0;
};

struct EnsembleResult {
    std::vector<double> times;
    // F = <W(t) V W(t) V>, G = <W(t) V>, q1 = <W(t)>, f12 = <W(t) V W(t)>,
    // autocorrelator = <W(t) W>
    std::map<std::string, EnsembleSeries> series;
    std::vector<EnsembleSeries> quasi;  // 16 entries, flat (v1, w2, v2, w3) order
    double max_unitarity_defect = 0.0;
    bool has_standard_error = true;     // false with fewer than two trajectories
};

// W and V must be Hermitian and square to the identity.
EnsembleResult ensemble_averages(const BrownianConfig& config, const Mat& rho, const Mat& w, const Mat& v);

// ((1 + w2 w3 + v1 v2) + w2 w3 v1 v2 F) / 16 for rho = 1/d
double analytic_avg_quasiprob(double w2, double w3, double v1, double v2, double f_value);

// Ensemble-averaged quasiprobability for a general state and single-site
// Pauli W, V. One- and two-point terms use their exact e^{-2t} decay, while
// f12 = <W(t) V W(t)> and F come from the ensemble.
cplx general_state_avg(const Mat& rho, const Mat& w, const Mat& v, double t, cplx f12, cplx f_value, double v1,
                       double w2, double v2, double w3);

// ((1 + c1) / (1 + c1 e^{3t}))^c2
double phenomenological_otoc(double t, double c1, double c2);

}  // namespace otoclab

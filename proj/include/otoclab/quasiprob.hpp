#pragma once

#include <optional>
#include <string>
#include <vector>

#include "otoclab/qla.hpp"
#include "otoclab/spin.hpp"

namespace otoclab {

// Caches the spectrum of a time-independent Hamiltonian so that U(t) and
// Heisenberg-picture operators are cheap to rebuild at many times.
class Evolver {
public:
    explicit Evolver(const Mat& hamiltonian);
    explicit Evolver(Eigensystem es);

    const Eigensystem& spectrum() const { return es_; }
    long dim() const { return es_.values.size(); }

    Mat propagator(double t) const;                // U = exp(-iHt)
    Mat heisenberg(const Mat& op, double t) const;  // U^dagger op U

private:
    Eigensystem es_;
};

enum class Grain { fine, coarse };

// One argument slot of a quasiprobability: the outcome eigenvalues in the
// order the slot is indexed, plus degeneracy labels for fine grain.
struct QuasiAxis {
    std::string name;
    std::vector<double> values;
    std::vector<int> labels;
    long size() const { return static_cast<long>(values.size()); }
};

// Dense table over the product of its axes, first axis slowest.
struct QuasiDistribution {
    Grain grain = Grain::coarse;
    std::vector<QuasiAxis> axes;
    std::vector<cplx> values;

    long flat_index(const std::vector<long>& idx) const;
    std::vector<long> unflatten(long flat) const;
    cplx at(const std::vector<long>& idx) const { return values[flat_index(idx)]; }
    // Coarse lookup by eigenvalue, one per axis.
    cplx value(const std::vector<double>& eigenvalues) const;
    long axis_index(const std::string& name) const;
    cplx sum() const;
};

struct WorkDistribution {
    std::vector<double> w;        // W
    std::vector<double> w_prime;  // W'
    std::vector<cplx> values;
    cplx at(double w_value, double w_prime_value) const;
    cplx sum() const;
};

struct CorrelatorSeries {
    std::vector<double> times;
    std::vector<cplx> values;
};

struct Marginal {
    std::vector<double> values;
    std::vector<int> labels;
    std::vector<double> probs;
    double max_imag = 0.0;
};

// ---- correlators -----------------------------------------------------------

cplx otoc(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
cplx otoc(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);

// <[W(t),V]^dagger [W(t),V]>
double commutator_square(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
double commutator_square(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);

// ---- OTOC quasiprobability, arguments ordered (v1, w2, v2, w3) -------------

QuasiDistribution coarse_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
QuasiDistribution coarse_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);

// Assembles the coarse distribution from the eight correlators that appear
// when the projectors are written as (1 +/- O)/2. Requires W^2 = V^2 = 1.
QuasiDistribution coarse_quasiprob_via_correlators(const Mat& rho, const Mat& w, const Mat& v,
                                                   const Evolver& ev, double t);
QuasiDistribution coarse_quasiprob_via_correlators(const Mat& rho, const Mat& w, const Mat& v,
                                                   const Mat& hamiltonian, double t);

// The eight correlators in the order 1, <W(t)>, <V>, <W(t)V>, <VW(t)>,
// <W(t)VW(t)>, <VW(t)V>, F(t).
std::vector<cplx> pauli_correlators(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
// Same, with the Heisenberg-picture W(t) supplied directly.
std::vector<cplx> pauli_correlators_of(const Mat& rho, const Mat& wt, const Mat& v);
// Combine correlators into the sixteen coarse values with +/-1 eigenvalues.
cplx quasi_from_correlators(const std::vector<cplx>& c, double v1, double w2, double v2, double w3);

inline constexpr long kMaxFineDim = 64;  // six qubits

QuasiDistribution fine_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
QuasiDistribution fine_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);

// Sum fine entries over degeneracy labels.
QuasiDistribution coarse_grain(const QuasiDistribution& fine);

// P(W, W') with W = w3* v2*, W' = w2 v1.
WorkDistribution work_distribution(const QuasiDistribution& quasi);
Marginal marginalize(const QuasiDistribution& quasi, long keep_axis);

// sum v1 w2 v2* w3* A(v1, w2, v2, w3)
cplx otoc_moment(const QuasiDistribution& quasi);
// sum W W' P(W, W')
cplx work_moment(const WorkDistribution& work);

// ---- regulated, time-ordered and k-fold variants ---------------------------

struct RegulatedResult {
    QuasiDistribution quasi;
    cplx f_reg;
};
RegulatedResult regulated_quasiprob_and_otoc(const Evolver& ev, double temperature, const Mat& w,
                                             const Mat& v, double t);
RegulatedResult regulated_quasiprob_and_otoc(const Mat& hamiltonian, double temperature, const Mat& w,
                                             const Mat& v, double t);
// Direct trace Tr(r W(t) r V r W(t) r V) with r = rho^(1/4).
cplx regulated_otoc_direct(const Evolver& ev, double temperature, const Mat& w, const Mat& v, double t);

struct TocResult {
    cplx toc;
    QuasiDistribution quasi;  // arguments (v1, w1, v2)
    WorkDistribution work;    // W = w1* v2*, W' = w1 v1
};
TocResult toc_and_toc_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
TocResult toc_and_toc_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);
cplx toc_moment(const WorkDistribution& work);

struct KfoldResult {
    cplx value;               // Tr(rho (W(t) V)^k)
    QuasiDistribution quasi;  // arguments (v1, w2, v2, w3, ..., vk, w(k+1))
};
inline constexpr int kMaxKfold = 5;
KfoldResult kfold_otoc_and_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                     int khat);
KfoldResult kfold_otoc_and_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian,
                                     double t, int khat);
// sum (prod w)(prod v) quasi
cplx kfold_moment(const QuasiDistribution& quasi);

// ---- time series -----------------------------------------------------------

// Evaluates the coarse OTOC quasiprobability at many times. Everything is
// moved into the energy eigenbasis once, after which W(t) is an elementwise
// phase and each time point costs (n_w - 1)(n_v - 1) matrix products.
class CoarseSeriesEngine {
public:
    CoarseSeriesEngine(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev);

    struct Point {
        QuasiDistribution quasi;
        cplx otoc;
    };
    Point at(double t) const;

private:
    RVec energies_;
    Spectral ws_, vs_;
    std::vector<Mat> p_;  // W projectors, energy basis
    std::vector<Mat> q_;  // V projectors, energy basis
    int rho_kind_ = 3;    // scalar, diagonal, pure, general
    cplx scalar_ = 0.0;
    RVec diag_;
    Vec psi_;
    Mat rho_;
};

struct Onset {
    bool found = false;
    double time = 0.0;
};
Onset scrambling_onset(const CorrelatorSeries& series, double threshold = 0.9);

std::vector<double> time_grid(double t_max, double t_step);

}  // namespace otoclab

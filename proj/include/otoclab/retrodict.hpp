#pragma once

#include <vector>

#include "otoclab/quasiprob.hpp"

namespace otoclab {

// Observables A, B, ..., K in the order they act, each with its eigensystem.
class ObservableChain {
public:
    explicit ObservableChain(std::vector<Mat> observables);

    int length() const { return static_cast<int>(ops_.size()); }
    long dim() const { return dim_; }
    const Mat& observable(int i) const { return ops_[i]; }
    const Eigensystem& eigen(int i) const { return eig_[i]; }

    Mat forward_product() const;   // K ... B A
    Mat backward_product() const;  // A B ... K

private:
    long dim_ = 0;
    std::vector<Mat> ops_;
    std::vector<Eigensystem> eig_;
};

// rho' is the state just before the chain acts and |f'> the final outcome
// evolved back to that time.
struct RetrodictionContext {
    Mat rho_prime;
    Vec f_prime;
    double probability = 0.0;  // <f'|rho'|f'>
};

inline constexpr double kMinConditioning = 1e-12;

RetrodictionContext make_context(const Mat& rho_prime, const Vec& f_prime);
// rho prepared at time 0, chain at t1, |f> detected at t2 >= t1.
RetrodictionContext make_context(const Mat& rho, const Evolver& ev, double t1, double t2, const Vec& f);

// Counts live complex entries held by an algorithm's own buffers.
class MemoryMeter {
public:
    void add(long entries) {
        live_ += entries;
        if (live_ > peak_) peak_ = live_;
    }
    void release(long entries) { live_ -= entries; }
    long live() const { return live_; }
    long peak() const { return peak_; }
    void reset() { live_ = peak_ = 0; }

private:
    long live_ = 0;
    long peak_ = 0;
};

// Re(<f'|A rho'|f'>) / <f'|rho'|f'>
double weak_value(const Mat& a, const RetrodictionContext& ctx);

// Method 1: forms Gamma = K...A + A...K explicitly. The meter, if given,
// is charged with the nonzero entries of Gamma.
double gamma_weak_direct(const ObservableChain& chain, const RetrodictionContext& ctx, MemoryMeter* meter = nullptr);
long gamma_nonzero_count(const ObservableChain& chain, double tol = 1e-12);

// Method 2: sums eigenvalue products against conditional quasiprobabilities
// without ever building Gamma. Tuples are visited in lexicographic order of
// ascending eigenvalues; branches whose running overlap product drops below
// 1e-14 in magnitude and tuples with zero eigenvalue product are skipped.
double gamma_weak_factored(const ObservableChain& chain, const RetrodictionContext& ctx,
                           MemoryMeter* meter = nullptr);

struct ConditionalEntry {
    std::vector<int> index;           // eigenvector column per observable
    std::vector<double> eigenvalues;
    cplx forward_kd;                  // <f'|k><k|j>...<b|a><a|rho'|f'>
    cplx backward_kd;                 // <f'|a><a|b>...<j|k><k|rho'|f'>
    double forward = 0.0;             // Re(forward_kd) / p
    double backward = 0.0;
};

struct ConditionalQuasiprobs {
    double probability = 0.0;
    std::vector<ConditionalEntry> entries;
};

ConditionalQuasiprobs conditional_quasiprobs(const ObservableChain& chain, const RetrodictionContext& ctx);

// Weak value of i(K...A - A...K), from the imaginary parts of the extended
// quasiprobabilities.
double tilde_gamma_weak(const ObservableChain& chain, const RetrodictionContext& ctx);
double tilde_gamma_direct(const ObservableChain& chain, const RetrodictionContext& ctx);

struct OtocRetrodiction {
    double value = 0.0;        // Gamma_weak for Gamma = V W(t) V
    double probability = 0.0;  // <w3|U rho U^dagger|w3>
    RVec v_values, w_values;   // fine eigenvalues of V and W
    // extended quasiprobability numerators indexed (v1, w2, v2), v1 slowest
    std::vector<cplx> numerators;
};

// Conditions on the fine outcome `w3_index` (an eigh(W) column) of a strong
// W measurement at time t, with rho prepared at time 0.
OtocRetrodiction otoc_retrodiction(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                   long w3_index);

// Tr(rho' [Gamma - Gamma_est]^2)
double weighted_trace_distance(const Mat& gamma, const Mat& gamma_est, const Mat& rho_prime);

// sum_f gamma_f |f'><f'| over the columns of f_primes
Mat estimator_operator(const std::vector<double>& gammas, const Mat& f_primes);

// Re(<f'|Gamma rho'|f'>) / <f'|rho'|f'> per column; zero where the outcome
// has no weight.
std::vector<double> optimal_estimates(const Mat& gamma, const Mat& rho_prime, const Mat& f_primes);

// The distance written as a constant plus a weighted sum of squares in
// gamma_f - (optimal estimate).
double distance_completed_square(const Mat& gamma, const Mat& rho_prime, const Mat& f_primes,
                                 const std::vector<double>& gammas);

}  // namespace otoclab

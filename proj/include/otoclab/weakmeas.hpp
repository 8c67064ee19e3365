#pragma once

#include <cstdint>
#include <vector>

#include "otoclab/quasiprob.hpp"

namespace otoclab {

enum class PhaseMode { real, imaginary };

struct CouplingConfig {
    double phi = 0.1;
    PhaseMode mode = PhaseMode::real;
};

// D+ = sqrt(p) P+ + sqrt(1-p) P-,  D- = sqrt(1-p) P+ + sqrt(p) P-.
struct PartialProjection {
    double p = 0.5;
    Mat plus_projector;
    Mat minus_projector;
    Mat d_plus() const;
    Mat d_minus() const;
};

// Kraus operators for the two ancilla outcomes. `plus` is the outcome that
// leans toward the projector.
struct KrausPair {
    Mat plus;
    Mat minus;
};

// M = sqrt(p) 1 + g P.
//   real:      M+- = a-+ 1 + (a+- - a-+) P, a+- = sqrt((1 +- sin phi)/2)
//   imaginary: M+- = (1 + (e^{-+i phi} - 1) P)/sqrt(2), g = -+i phi/sqrt(2) + O(phi^2)
KrausPair kraus_pair(const Mat& proj, const CouplingConfig& coupling);

// Ancilla in |0>, rotation R_y(theta0 + phi) when the system is in P and
// R_y(theta0 - phi) otherwise, then a sigma^z readout of the ancilla.
// Outcome 1 gives `plus`, outcome 0 gives `minus`.
KrausPair ancilla_subcircuit_kraus(const Mat& proj, double phi, double theta0 = M_PI / 2);

// sqrt(M^dagger M)
Mat polar_positive_part(const Mat& m);

// ---- protocols -------------------------------------------------------------

enum class ProtocolKind {
    three_weak,   // weak V, U, weak W, U^dagger, weak V, U, strong W
    two_weak_v,   // prepare V eigenstates: U, weak W, U^dagger, weak V, U, strong W
    two_weak_w,   // prepare W eigenstates: U^dagger, weak V, U, weak W, U^dagger, strong V
};

// Joint outcome statistics. Bins are indexed [prep][s1 s2 (s3)][final] with
// the first weak outcome as the most significant bit and bit value 1 for the
// minus outcome. `final_values` are the eigenvalues of the strong readout.
struct ProtocolHistogram {
    ProtocolKind kind = ProtocolKind::three_weak;
    int n_weak = 3;
    std::vector<double> prep_weights{1.0};
    std::vector<double> final_values;
    std::vector<double> probs;  // per prep, sums to 1
    std::vector<std::uint64_t> counts;
    std::uint64_t shots = 0;    // per prep, 0 for exact probabilities

    long n_prep() const { return static_cast<long>(prep_weights.size()); }
    long n_final() const { return static_cast<long>(final_values.size()); }
    long n_outcomes() const { return 1L << n_weak; }
    long bins_per_prep() const { return n_outcomes() * n_final(); }
    long bin(long prep, long sbits, long final) const {
        return (prep * n_outcomes() + sbits) * n_final() + final;
    }
};

// Three weak measurements. `couplings` has one entry per weak step; a single
// entry is reused for all steps. shots = 0 returns the exact distribution.
ProtocolHistogram simulate_protocol(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                    const std::vector<CouplingConfig>& couplings, std::uint64_t shots,
                                    std::uint64_t seed);
ProtocolHistogram simulate_protocol(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t,
                                    const CouplingConfig& coupling, std::uint64_t shots, std::uint64_t seed);

// Exact distribution from the Heisenberg-picture trace formula; used as the
// oracle for the step-by-step simulation.
std::vector<double> protocol_probabilities_direct(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev,
                                                  double t, const std::vector<CouplingConfig>& couplings);

// Two weak measurements. Requires rho to commute with V (V-eigenstate
// preparation) or with W(t) (W-eigenstate preparation).
ProtocolHistogram two_measurement_protocol(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                           const std::vector<CouplingConfig>& couplings, std::uint64_t shots,
                                           std::uint64_t seed);

// ---- inference -------------------------------------------------------------

struct ProtocolRun {
    std::vector<CouplingConfig> couplings;
    ProtocolHistogram hist;
};

struct InferenceResult {
    QuasiDistribution quasi;          // (v1, w2, v2, w3)
    std::vector<double> sigma_re;     // zero in exact mode
    std::vector<double> sigma_im;
    std::vector<cplx> background;     // everything except the all-weak cross term
    double max_condition = 0.0;
};

// The axis eigenvalues come from W and V; both must have exactly two
// distinct eigenvalues.
InferenceResult infer_coarse_quasiprob(const std::vector<ProtocolRun>& runs, const Spectral& w_spec,
                                       const Spectral& v_spec);

// Runs every real/imaginary assignment of the weak steps at each strength.
std::vector<ProtocolRun> run_inference_batch(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                             const std::vector<double>& phis, std::uint64_t shots,
                                             std::uint64_t seed, bool two_measurements = false);

}  // namespace otoclab

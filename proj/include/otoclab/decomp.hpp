#pragma once

#include <utility>
#include <vector>

#include "otoclab/quasiprob.hpp"

namespace otoclab {

inline constexpr double kVanishingOverlap = 1e-10;

// rho minus every |v2><v2|rho U^dagger|w3><w3|U term whose overlap
// <w3|U|v2> vanishes. Bases are the eigh columns of V and W.
Mat asym_decohere(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
Mat asym_decohere(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);

// C(v2, w3) = sum over (w2, v1) of the fine quasiprobability; rows v2,
// columns w3.
Mat decomposition_coefficients(const QuasiDistribution& fine);

struct DecompositionReport {
    Mat rho_prime;
    Mat coefficients;                          // (v2, w3)
    Mat overlaps;                              // <w3|U|v2>, rows w3
    std::vector<std::pair<long, long>> omitted_pairs;  // (v2, w3)
    Mat reconstruction;                        // sum C |v2><w3|U / <w3|U|v2>
    double reconstruction_error = 0.0;         // max entry of reconstruction - rho_prime
    double trace_error = 0.0;                  // |Tr rho' - 1|
    double hermiticity_defect = 0.0;           // max entry of rho' - rho'^dagger
};

DecompositionReport decompose(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t);
DecompositionReport decompose(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t);

struct OverlapSnapshot {
    double t = 0.0;
    std::vector<double> magnitudes;  // |<w3|U|v2>|, sorted ascending
    std::vector<long> histogram;     // counts over equal bins on [0, 1]
    double mean = 0.0;
    double mean_square = 0.0;
    double min = 0.0;
    double max = 0.0;
    double fraction_near_unbiased = 0.0;  // within 10% of 1/sqrt(d)
    long vanishing = 0;
};

OverlapSnapshot summarize_overlaps(const Mat& overlaps, double t = 0.0, int bins = 20);
std::vector<OverlapSnapshot> mub_overlap_statistics(const Mat& w, const Mat& v, const Evolver& ev,
                                                    const std::vector<double>& times, int bins = 20);

}  // namespace otoclab

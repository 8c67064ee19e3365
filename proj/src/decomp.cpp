#include "otoclab/decomp.hpp"

#include <algorithm>
#include <cmath>

namespace otoclab {

namespace {

struct Bases {
    Eigensystem we, ve;
    Mat u;
    Mat overlaps;  // <w|U|v>
};

Bases bases(const Mat& w, const Mat& v, const Evolver& ev, double t) {
    const long d = ev.dim();
    if (w.rows() != d || v.rows() != d) throw ConfigError("operator dimensions do not match the Hamiltonian");
    if (d > kMaxFineDim) throw ConfigError("the decomposition needs fine-grained bases and is limited to 6 qubits");
    Bases b{eigh(w), eigh(v), ev.propagator(t), Mat()};
    b.overlaps = b.we.vectors.adjoint() * b.u * b.ve.vectors;
    return b;
}

// |v2><w3|U
Mat dyad(const Bases& b, long v2, long w3) {
    return b.ve.vectors.col(v2) * (b.we.vectors.col(w3).adjoint() * b.u);
}

Mat decohere(const Mat& rho, const Bases& b, std::vector<std::pair<long, long>>* omitted) {
    const long d = rho.rows();
    Mat coh = b.ve.vectors.adjoint() * rho * b.u.adjoint() * b.we.vectors;  // <v2|rho U^dagger|w3>
    Mat out = rho;
    for (long v2 = 0; v2 < d; ++v2)
        for (long w3 = 0; w3 < d; ++w3)
            if (std::abs(b.overlaps(w3, v2)) < kVanishingOverlap) {
                out -= coh(v2, w3) * dyad(b, v2, w3);
                if (omitted) omitted->emplace_back(v2, w3);
            }
    return out;
}

}  // namespace

Mat asym_decohere(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    if (rho.rows() != ev.dim()) throw ConfigError("state dimension does not match the Hamiltonian");
    return decohere(rho, bases(w, v, ev, t), nullptr);
}

Mat asym_decohere(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return asym_decohere(rho, w, v, Evolver(hamiltonian), t);
}

Mat decomposition_coefficients(const QuasiDistribution& fine) {
    if (fine.grain != Grain::fine || fine.axes.size() != 4)
        throw ConfigError("decomposition coefficients need a fine-grained OTOC quasiprobability");
    const long d = fine.axes[0].size();
    Mat c = Mat::Zero(d, d);
    for (long f = 0; f < static_cast<long>(fine.values.size()); ++f) {
        auto i = fine.unflatten(f);
        c(i[2], i[3]) += fine.values[f];
    }
    return c;
}

DecompositionReport decompose(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    if (rho.rows() != ev.dim()) throw ConfigError("state dimension does not match the Hamiltonian");
    const long d = ev.dim();
    Bases b = bases(w, v, ev, t);
    DecompositionReport r;
    r.rho_prime = decohere(rho, b, &r.omitted_pairs);
    r.coefficients = decomposition_coefficients(fine_quasiprob(rho, w, v, ev, t));
    r.overlaps = b.overlaps;
    r.reconstruction = Mat::Zero(d, d);
    for (long v2 = 0; v2 < d; ++v2)
        for (long w3 = 0; w3 < d; ++w3) {
            cplx ov = b.overlaps(w3, v2);
            if (std::abs(ov) < kVanishingOverlap) continue;
            r.reconstruction += (r.coefficients(v2, w3) / ov) * dyad(b, v2, w3);
        }
    r.reconstruction_error = max_abs(r.reconstruction - r.rho_prime);
    r.trace_error = std::abs(r.rho_prime.trace() - 1.0);
    r.hermiticity_defect = max_abs(r.rho_prime - r.rho_prime.adjoint());
    return r;
}

DecompositionReport decompose(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return decompose(rho, w, v, Evolver(hamiltonian), t);
}

OverlapSnapshot summarize_overlaps(const Mat& overlaps, double t, int bins) {
    if (bins < 1) throw ConfigError("histogram needs at least one bin");
    OverlapSnapshot s;
    s.t = t;
    const double d = static_cast<double>(overlaps.rows());
    const double unbiased = 1.0 / std::sqrt(d);
    s.histogram.assign(bins, 0);
    long near = 0;
    for (long i = 0; i < overlaps.size(); ++i) {
        double m = std::abs(overlaps.data()[i]);
        s.magnitudes.push_back(m);
        s.mean += m;
        s.mean_square += m * m;
        if (std::abs(m - unbiased) <= 0.1 * unbiased) ++near;
        if (m < kVanishingOverlap) ++s.vanishing;
        long bin = std::min<long>(bins - 1, static_cast<long>(m * bins));
        ++s.histogram[bin];
    }
    std::sort(s.magnitudes.begin(), s.magnitudes.end());
    const double n = static_cast<double>(s.magnitudes.size());
    s.mean /= n;
    s.mean_square /= n;
    s.min = s.magnitudes.front();
    s.max = s.magnitudes.back();
    s.fraction_near_unbiased = static_cast<double>(near) / n;
    return s;
}

std::vector<OverlapSnapshot> mub_overlap_statistics(const Mat& w, const Mat& v, const Evolver& ev,
                                                    const std::vector<double>& times, int bins) {
    std::vector<OverlapSnapshot> out;
    if (times.empty()) return out;
    Bases b = bases(w, v, ev, 0.0);
    for (double t : times) out.push_back(summarize_overlaps(b.we.vectors.adjoint() * ev.propagator(t) * b.ve.vectors, t, bins));
    return out;
}

}  // namespace otoclab

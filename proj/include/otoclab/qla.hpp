#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "otoclab/errors.hpp"

namespace otoclab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I{0.0, 1.0};

// Largest Hilbert-space dimension any dense routine will accept.
inline constexpr long kMaxDim = 1L << 12;

struct Eigensystem {
    RVec values;   // ascending
    Mat vectors;   // columns are eigenvectors
};

double max_abs(const Mat& m);
bool is_finite(const Mat& m);
bool is_hermitian(const Mat& m, double tol = 1e-12);
bool is_unitary(const Mat& m, double tol = 1e-10);

Mat kron(const Mat& a, const Mat& b, long max_dim = kMaxDim);

// Hermitian eigendecomposition. Eigenvalues closer than `degeneracy_tol`
// (relative to the spectral radius) are treated as one block, and each block
// is re-orthonormalized against the computational basis in index order so the
// basis does not depend on LAPACK-style rotation choices.
Eigensystem eigh(const Mat& h, double degeneracy_tol = 1e-10);

// exp(z * h) through the eigendecomposition of h.
Mat expm_scaled(const Mat& h, cplx z);
Mat expm_scaled(const Eigensystem& es, cplx z);

// Unit vector drawn from the unitarily invariant measure.
Vec haar_random_state(long dim, std::uint64_t seed);
Vec haar_random_state(long dim, std::mt19937_64& rng);
// Haar unitary from QR of a Ginibre matrix with the phase correction.
Mat haar_random_unitary(long dim, std::mt19937_64& rng);
// Random full-rank density matrix G G^dagger / Tr.
Mat random_density_matrix(long dim, std::mt19937_64& rng);
// Random Hermitian matrix with Gaussian entries.
Mat random_hermitian(long dim, std::mt19937_64& rng);

// Seed for substream `index` of a master seed. Distinct (master, index)
// pairs give unrelated streams, so neighbouring master seeds do not overlap.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

inline Mat ket_to_density(const Vec& psi) { return psi * psi.adjoint(); }

}  // namespace otoclab

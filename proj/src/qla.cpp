#include "otoclab/qla.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace otoclab {

double max_abs(const Mat& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_finite(const Mat& m) {
    return m.allFinite();
}

bool is_hermitian(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    double scale = std::max(1.0, max_abs(m));
    return max_abs(m - m.adjoint()) <= tol * scale;
}

bool is_unitary(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return max_abs(m.adjoint() * m - Mat::Identity(m.rows(), m.cols())) <= tol;
}

Mat kron(const Mat& a, const Mat& b, long max_dim) {
    if (a.rows() != a.cols() || b.rows() != b.cols())
        throw ConfigError("kron: operands must be square");
    if (!is_finite(a) || !is_finite(b))
        throw ConfigError("kron: non-finite entries");
    long d = a.rows() * b.rows();
    if (d > max_dim)
        throw ConfigError("kron: dimension " + std::to_string(d) + " exceeds maximum " +
                          std::to_string(max_dim));
    Mat out(d, d);
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

namespace {

// Make the phase of a single eigenvector canonical: the first component with
// non-negligible magnitude becomes real and positive.
void fix_phase(Eigen::Ref<Vec> v) {
    double thresh = 1e-8 * v.cwiseAbs().maxCoeff();
    for (long i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > thresh) {
            v *= std::conj(v(i)) / std::abs(v(i));
            return;
        }
    }
}

// Replace the columns of a degenerate block by the Gram-Schmidt sequence of
// P e_0, P e_1, ... where P projects onto the block. Works in block
// coordinates: P e_j = B c_j with c_j = B^dagger e_j.
void canonicalize_block(Eigen::Ref<Mat> block) {
    const long m = block.cols();
    const long d = block.rows();
    Mat coords(m, m);
    long accepted = 0;
    for (long j = 0; j < d && accepted < m; ++j) {
        Vec c = block.row(j).adjoint();
        for (long k = 0; k < accepted; ++k) {
            cplx ov = coords.col(k).dot(c);
            c -= ov * coords.col(k);
        }
        // second pass keeps orthogonality at machine precision
        for (long k = 0; k < accepted; ++k) {
            cplx ov = coords.col(k).dot(c);
            c -= ov * coords.col(k);
        }
        double n = c.norm();
        if (n > 1e-6) {
            coords.col(accepted++) = c / n;
        }
    }
    if (accepted != m) throw NumericError("eigh: degenerate block canonicalization failed");
    block = (block * coords).eval();
}

}  // namespace

Eigensystem eigh(const Mat& h, double degeneracy_tol) {
    if (h.rows() != h.cols() || h.rows() == 0) throw ConfigError("eigh: matrix must be square and nonempty");
    if (!is_finite(h)) throw ConfigError("eigh: non-finite entries");
    if (!is_hermitian(h)) throw ConfigError("eigh: matrix is not Hermitian");
    Mat hs = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> solver(hs);
    if (solver.info() != Eigen::Success) throw NumericError("eigh: eigensolver did not converge");
    Eigensystem es{solver.eigenvalues(), solver.eigenvectors()};

    const long d = h.rows();
    double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
    long start = 0;
    while (start < d) {
        long stop = start + 1;
        while (stop < d && es.values(stop) - es.values(stop - 1) <= degeneracy_tol * scale) ++stop;
        long m = stop - start;
        if (m == 1) {
            fix_phase(es.vectors.col(start));
        } else {
            canonicalize_block(es.vectors.middleCols(start, m));
            // a degenerate block shares one eigenvalue
            double mean = es.values.segment(start, m).mean();
            es.values.segment(start, m).setConstant(mean);
        }
        start = stop;
    }
    return es;
}

Mat expm_scaled(const Eigensystem& es, cplx z) {
    Vec f(es.values.size());
    for (long i = 0; i < f.size(); ++i) f(i) = std::exp(z * es.values(i));
    return es.vectors * f.asDiagonal() * es.vectors.adjoint();
}

Mat expm_scaled(const Mat& h, cplx z) {
    return expm_scaled(eigh(h), z);
}

Vec haar_random_state(long dim, std::mt19937_64& rng) {
    if (dim < 1) throw ConfigError("haar_random_state: dim must be >= 1");
    std::normal_distribution<double> g(0.0, 1.0);
    Vec psi(dim);
    for (long i = 0; i < dim; ++i) {
        double re = g(rng);
        double im = g(rng);
        psi(i) = cplx(re, im);
    }
    return psi / psi.norm();
}

Vec haar_random_state(long dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return haar_random_state(dim, rng);
}

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Mat haar_random_unitary(long dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat z(dim, dim);
    for (long j = 0; j < dim; ++j)
        for (long i = 0; i < dim; ++i) {
            double re = g(rng);
            double im = g(rng);
            z(i, j) = cplx(re, im);
        }
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (long j = 0; j < dim; ++j) {
        cplx d = r(j, j);
        q.col(j) *= d / std::abs(d);
    }
    return q;
}

Mat random_density_matrix(long dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat z(dim, dim);
    for (long j = 0; j < dim; ++j)
        for (long i = 0; i < dim; ++i) {
            double re = g(rng);
            double im = g(rng);
            z(i, j) = cplx(re, im);
        }
    Mat rho = z * z.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

Mat random_hermitian(long dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat z(dim, dim);
    for (long j = 0; j < dim; ++j)
        for (long i = 0; i < dim; ++i) {
            double re = g(rng);
            double im = g(rng);
            z(i, j) = cplx(re, im);
        }
    return 0.5 * (z + z.adjoint());
}

}  // namespace otoclab

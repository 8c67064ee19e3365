#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "otoclab/qla.hpp"
#include "otoclab/spin.hpp"

using namespace otoclab;

namespace {

// Characteristic polynomial by Faddeev-LeVerrier, roots by Durand-Kerner.
std::vector<double> charpoly_roots(const Mat& a) {
    const long n = a.rows();
    std::vector<cplx> c(n + 1);
    c[n] = 1.0;
    Mat m = Mat::Zero(n, n);
    Mat id = Mat::Identity(n, n);
    for (long k = 1; k <= n; ++k) {
        m = a * m + c[n - k + 1] * id;
        c[n - k] = -(a * m).trace() / static_cast<double>(k);
    }
    std::vector<cplx> z(n);
    for (long i = 0; i < n; ++i) z[i] = std::pow(cplx(0.4, 0.9), static_cast<double>(i)) * 3.0;
    for (int it = 0; it < 2000; ++it) {
        for (long i = 0; i < n; ++i) {
            cplx p = 0.0;
            for (long k = n; k >= 0; --k) p = p * z[i] + c[k];
            cplx den = 1.0;
            for (long j = 0; j < n; ++j)
                if (j != i) den *= z[i] - z[j];
            z[i] -= p / den;
        }
    }
    std::vector<double> r;
    for (auto x : z) r.push_back(x.real());
    std::sort(r.begin(), r.end());
    return r;
}

}  // namespace

TEST_CASE("kron ordering") {
    Mat sz = pauli(PauliAxis::z), sx = pauli(PauliAxis::x), id = Mat::Identity(2, 2);
    Mat a = kron(sz, id);
    CHECK(max_abs(a - Eigen::Vector4cd(1, 1, -1, -1).asDiagonal().toDenseMatrix()) == 0.0);
    CHECK(max_abs(kron(id, id) - Mat::Identity(4, 4)) == 0.0);
    Vec k00 = Vec::Zero(4);
    k00(0) = 1;
    Vec out = kron(sx, sx) * k00;
    CHECK(std::abs(out(3) - 1.0) == 0.0);
    CHECK(out.norm() == doctest::Approx(1.0));
}

TEST_CASE("kron associativity and size guard") {
    std::mt19937_64 rng(3);
    Mat a = random_hermitian(2, rng), b = random_hermitian(3, rng), c = random_hermitian(2, rng);
    CHECK(max_abs(kron(kron(a, b), c) - kron(a, kron(b, c))) <= 1e-14);
    CHECK_NOTHROW(kron(Mat::Identity(64, 64), Mat::Identity(64, 64)));
    CHECK_THROWS_AS(kron(Mat::Identity(128, 128), Mat::Identity(64, 64)), ConfigError);
}

TEST_CASE("eigh basics") {
    Eigensystem z = eigh(pauli(PauliAxis::z));
    CHECK(z.values(0) == doctest::Approx(-1));
    CHECK(z.values(1) == doctest::Approx(1));
    Eigensystem x = eigh(pauli(PauliAxis::x));
    CHECK(std::abs(std::abs(x.vectors(0, 0)) - 1 / std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(x.vectors(0, 0) + x.vectors(1, 0)) < 1e-14);
    Mat bad = Mat::Zero(2, 2);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(eigh(bad), ConfigError);
}

TEST_CASE("eigh of a small Ising chain against characteristic polynomial roots") {
    Mat h = ising_hamiltonian({2, 1.0, 0.5, 1.05});
    Eigensystem es = eigh(h);
    auto roots = charpoly_roots(h);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(es.values(i) - roots[i]) < 1e-10);
    Mat rec = es.vectors * es.values.cast<cplx>().asDiagonal() * es.vectors.adjoint();
    CHECK(max_abs(rec - h) <= 1e-10 * max_abs(h));
}

TEST_CASE("eigh degenerate blocks are deterministic product states") {
    Mat w = site_pauli(3, 1, PauliAxis::z);
    Eigensystem es = eigh(w);
    CHECK(is_unitary(es.vectors));
    // every eigenvector is a computational basis vector
    for (long j = 0; j < 8; ++j) CHECK(es.vectors.col(j).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    // a random unitary conjugation of a degenerate operator reconstructs
    std::mt19937_64 rng(11);
    Mat u = haar_random_unitary(8, rng);
    Mat h = u * w * u.adjoint();
    Eigensystem e2 = eigh(h);
    Mat rec = e2.vectors * e2.values.cast<cplx>().asDiagonal() * e2.vectors.adjoint();
    CHECK(max_abs(rec - h) <= 1e-10 * max_abs(h));
    CHECK(is_unitary(e2.vectors));
}

TEST_CASE("expm_scaled") {
    std::mt19937_64 rng(5);
    Mat h = random_hermitian(6, rng);
    CHECK(max_abs(expm_scaled(h, 0.0) - Mat::Identity(6, 6)) < 1e-12);
    Mat e = expm_scaled(pauli(PauliAxis::z), -I * M_PI / 2.0);
    CHECK(std::abs(e(0, 0) - std::exp(-I * M_PI / 2.0)) < 1e-14);
    CHECK(std::abs(e(1, 1) - std::exp(I * M_PI / 2.0)) < 1e-14);
    for (double t : {0.0, 0.7, 3.0, 10.0}) CHECK(is_unitary(expm_scaled(h, -I * t)));
    Mat hi = ising_hamiltonian({3, 1.0, 0.5, 1.05});
    Mat b = expm_scaled(hi, -1.0 / 0.8);
    b /= b.trace();
    CHECK(max_abs(b - thermal_state(hi, 0.8)) < 1e-12);
}

TEST_CASE("trace cyclicity") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 5; ++i) {
        Mat a = random_hermitian(8, rng) + I * random_hermitian(8, rng);
        Mat b = random_hermitian(8, rng);
        CHECK(std::abs((a * b).trace() - (b * a).trace()) < 1e-12);
    }
}

TEST_CASE("haar random states") {
    Vec a = haar_random_state(16, 42);
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_abs(a - haar_random_state(16, 42)) == 0.0);
    std::mt19937_64 rng(1);
    const int n = 10000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double p = std::norm(haar_random_state(4, rng)(0));
        s += p;
        s2 += p * p;
    }
    double mean = s / n;
    double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 0.25) < 3 * se);
}

#include <cmath>
#include <random>

#include "doctest.h"
#include "otoclab/retrodict.hpp"
#include "otoclab/stats.hpp"
#include "test_util.hpp"

using namespace otoclab;
using namespace testutil;

namespace {

RetrodictionContext random_context(long d, std::mt19937_64& rng) {
    Mat rho = random_density_matrix(d, rng);
    Vec f = haar_random_state(d, rng);
    return make_context(rho, f);
}

std::vector<Mat> random_chain(long d, int k, std::mt19937_64& rng) {
    std::vector<Mat> ops;
    for (int j = 0; j < k; ++j) ops.push_back(random_hermitian(d, rng));
    return ops;
}

Vec qubit(double angle) {
    Vec v(2);
    v << std::cos(angle), std::sin(angle);
    return v;
}

// (sigma^x + sigma^z)/sqrt(2) on sites 1..k of six qubits
std::vector<Mat> local_chain(int k) {
    std::vector<Mat> ops;
    for (int s = 1; s <= k; ++s)
        ops.push_back((site_pauli(6, s, PauliAxis::x) + site_pauli(6, s, PauliAxis::z)) / std::sqrt(2.0));
    return ops;
}

}  // namespace

TEST_CASE("weak value basics") {
    std::mt19937_64 rng(1);
    auto ctx = random_context(4, rng);
    CHECK(weak_value(Mat::Identity(4, 4), ctx) == doctest::Approx(1.0).epsilon(1e-12));
    Vec f = haar_random_state(4, rng);
    auto pure = make_context(f * f.adjoint(), f);
    Mat a = random_hermitian(4, rng);
    CHECK(std::abs(weak_value(a, pure) - f.dot(a * f).real()) < 1e-12);

    Vec e0 = Vec::Zero(4), e1 = Vec::Zero(4);
    e0(0) = 1;
    e1(1) = 1;
    CHECK_THROWS_AS(make_context(e0 * e0.adjoint(), e1), NumericError);
    CHECK_THROWS_AS(make_context(e0 * e0.adjoint(), Vec::Ones(4)), ConfigError);
}

TEST_CASE("anomalous qubit weak value") {
    // sigma^z weak value between cos/sin states: cos(chi + theta) / cos(chi - theta)
    const double theta = M_PI / 4, chi = -M_PI / 4 + 0.05;
    Vec psi = qubit(theta), f = qubit(chi);
    auto ctx = make_context(psi * psi.adjoint(), f);
    double wv = weak_value(pauli(PauliAxis::z), ctx);
    CHECK(std::abs(wv - std::cos(chi + theta) / std::cos(chi - theta)) < 1e-10);
    CHECK(wv > 1.0);
}

TEST_CASE("negative quasiprobability accompanies anomalous weak values") {
    std::mt19937_64 rng(2);
    int anomalous = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        auto ctx = random_context(2, rng);
        Mat a = random_hermitian(2, rng);
        ObservableChain chain({a});
        auto cq = conditional_quasiprobs(chain, ctx);
        double amax = chain.eigen(0).values.cwiseAbs().maxCoeff();
        double wv = weak_value(a, ctx);
        bool negative = false;
        for (const auto& e : cq.entries) negative = negative || e.forward < 0;
        if (std::abs(wv) > amax + 1e-12) {
            ++anomalous;
            CHECK(negative);
        }
        // bounded-weak-value lemma
        if (!negative) CHECK(std::abs(wv) <= amax + 1e-12);
    }
    CHECK(anomalous > 0);
}

TEST_CASE("gamma for trivial chains") {
    std::mt19937_64 rng(3);
    auto ctx = random_context(4, rng);
    Mat id = Mat::Identity(4, 4);
    ObservableChain ids({id, id, id});
    CHECK(std::abs(gamma_weak_direct(ids, ctx) - 2.0) < 1e-12);
    CHECK(std::abs(gamma_weak_factored(ids, ctx) - 2.0) < 1e-12);

    Mat a = random_hermitian(4, rng);
    ObservableChain one({a});
    CHECK(std::abs(gamma_weak_direct(one, ctx) - 2 * weak_value(a, ctx)) < 1e-12);
    CHECK(std::abs(gamma_weak_factored(one, ctx) - 2 * weak_value(a, ctx)) < 1e-12);

    // single projector: twice the KD term of its +1 eigenvector
    Vec e = haar_random_state(4, rng);
    ObservableChain proj({e * e.adjoint()});
    cplx kd = ctx.f_prime.dot(e) * e.dot(ctx.rho_prime * ctx.f_prime);
    CHECK(std::abs(gamma_weak_factored(proj, ctx) - 2 * kd.real() / ctx.probability) < 1e-12);
}

TEST_CASE("method 1 and method 2 agree") {
    std::mt19937_64 rng(4);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        long d = 2 + static_cast<long>(rng() % 7);
        int k = 1 + static_cast<int>(rng() % 4);
        auto ctx = random_context(d, rng);
        ObservableChain chain(random_chain(d, k, rng));
        worst = std::max(worst, std::abs(gamma_weak_direct(chain, ctx) - gamma_weak_factored(chain, ctx)));
    }
    CHECK(worst <= 1e-10);

    // evolved context through a Hamiltonian
    Evolver ev(nonintegrable(3));
    Mat rho = random_density_matrix(8, rng);
    Vec f = Vec::Zero(8);
    f(5) = 1;
    auto ctx = make_context(rho, ev, 0.4, 1.3, f);
    ObservableChain chain(random_chain(8, 3, rng));
    CHECK(std::abs(gamma_weak_direct(chain, ctx) - gamma_weak_factored(chain, ctx)) < 1e-10);
    CHECK_THROWS_AS(make_context(rho, ev, 1.3, 0.4, f), ConfigError);
}

TEST_CASE("conditional quasiprobabilities") {
    std::mt19937_64 rng(5);
    auto ctx = random_context(4, rng);
    ObservableChain chain(random_chain(4, 3, rng));
    auto cq = conditional_quasiprobs(chain, ctx);
    double sf = 0, sb = 0, gamma = 0;
    for (const auto& e : cq.entries) {
        sf += e.forward;
        sb += e.backward;
        double lam = e.eigenvalues[0] * e.eigenvalues[1] * e.eigenvalues[2];
        gamma += lam * (e.forward + e.backward);
    }
    CHECK(std::abs(sf - 1) < 1e-10);
    CHECK(std::abs(sb - 1) < 1e-10);
    CHECK(std::abs(gamma - gamma_weak_direct(chain, ctx)) < 1e-10);

    // k = 1 reduces to Re(<f'|a><a|rho'|f'>)/p
    Mat a = random_hermitian(4, rng);
    ObservableChain one({a});
    auto c1 = conditional_quasiprobs(one, ctx);
    Eigensystem es = eigh(a);
    REQUIRE(c1.entries.size() == 4);
    for (const auto& e : c1.entries) {
        Vec ket = es.vectors.col(e.index[0]);
        double expect = (ctx.f_prime.dot(ket) * ket.dot(ctx.rho_prime * ctx.f_prime)).real() / ctx.probability;
        CHECK(std::abs(e.forward - expect) < 1e-12);
        CHECK(std::abs(e.backward - expect) < 1e-12);
    }

    // lexicographic order of ascending eigenvalues
    for (std::size_t j = 1; j < cq.entries.size(); ++j) CHECK(cq.entries[j - 1].index < cq.entries[j].index);
}

TEST_CASE("tilde gamma") {
    std::mt19937_64 rng(6);
    auto ctx = random_context(2, rng);
    ObservableChain paulis({pauli(PauliAxis::x), pauli(PauliAxis::y)});
    CHECK(std::abs(tilde_gamma_weak(paulis, ctx) - 2 * weak_value(pauli(PauliAxis::z), ctx)) < 1e-10);

    Mat z = site_pauli(2, 1, PauliAxis::z), zz = site_pauli(2, 2, PauliAxis::z);
    auto ctx4 = random_context(4, rng);
    ObservableChain commuting({z, zz, z * zz});
    CHECK(std::abs(tilde_gamma_weak(commuting, ctx4)) < 1e-12);

    for (int trial = 0; trial < 5; ++trial) {
        auto c = random_context(5, rng);
        ObservableChain chain(random_chain(5, 3, rng));
        CHECK(std::abs(tilde_gamma_weak(chain, c) - tilde_gamma_direct(chain, c)) < 1e-10);
    }
}

TEST_CASE("otoc retrodiction") {
    // t = 0, Paulis on distinct sites: V W V = W and the weak value is w3
    const int n = 2;
    Evolver ev(nonintegrable(n));
    Mat w = site_pauli(n, 1, PauliAxis::z), v = site_pauli(n, 2, PauliAxis::x);
    Eigensystem we = eigh(w);
    for (long i = 0; i < 4; ++i) {
        auto r = otoc_retrodiction(maximally_mixed(n), w, v, ev, 0.0, i);
        CHECK(std::abs(r.value - we.values(i)) < 1e-12);
    }

    std::mt19937_64 rng(7);
    Mat rho = random_density_matrix(4, rng);
    Mat wg = random_hermitian(4, rng), vg = random_hermitian(4, rng);
    const double t = 0.8;
    auto fine = fine_quasiprob(rho, wg, vg, ev, t);
    Eigensystem wge = eigh(wg);
    Mat u = ev.propagator(t);
    Mat wt = u.adjoint() * wg * u;
    for (long i = 0; i < 4; ++i) {
        auto r = otoc_retrodiction(rho, wg, vg, ev, t, i);
        double worst = 0;
        for (long v1 = 0; v1 < 4; ++v1)
            for (long w2 = 0; w2 < 4; ++w2)
                for (long v2 = 0; v2 < 4; ++v2)
                    worst = std::max(worst, std::abs(r.numerators[(v1 * 4 + w2) * 4 + v2] - fine.at({v1, w2, v2, i})));
        CHECK(worst < 1e-12);

        auto ctx = make_context(rho, ev, 0.0, t, wge.vectors.col(i));
        CHECK(std::abs(ctx.probability - r.probability) < 1e-12);
        CHECK(std::abs(r.value - weak_value(vg * wt * vg, ctx)) < 1e-10);
        ObservableChain chain({vg, wt, vg});
        CHECK(std::abs(2 * r.value - gamma_weak_direct(chain, ctx)) < 1e-10);
    }
}

TEST_CASE("weighted trace distance") {
    std::mt19937_64 rng(8);
    const long d = 4;
    Mat rho = random_density_matrix(d, rng);
    Mat gamma = random_hermitian(d, rng);
    Mat basis = haar_random_unitary(d, rng);
    CHECK(std::abs(weighted_trace_distance(gamma, gamma, rho)) < 1e-14);

    auto best = optimal_estimates(gamma, rho, basis);
    double dbest = weighted_trace_distance(gamma, estimator_operator(best, basis), rho);
    CHECK(dbest >= -1e-12);
    CHECK(std::abs(dbest - distance_completed_square(gamma, rho, basis, best)) < 1e-10);
    for (long f = 0; f < d; ++f)
        for (double eps : {-1e-3, 1e-3, -0.1, 0.1}) {
            auto g = best;
            g[f] += eps;
            double dist = weighted_trace_distance(gamma, estimator_operator(g, basis), rho);
            CHECK(dist >= dbest);
            CHECK(std::abs(dist - distance_completed_square(gamma, rho, basis, g)) < 1e-10);
        }
}

TEST_CASE("memory scaling") {
    Vec f = Vec::Zero(64);
    f(0) = 1;
    std::mt19937_64 rng(9);
    auto ctx = make_context(random_density_matrix(64, rng), f);
    std::vector<double> ks, peaks;
    long prev_nnz = 0;
    for (int k = 2; k <= 6; ++k) {
        ObservableChain chain(local_chain(k));
        MemoryMeter m1, m2;
        double g1 = gamma_weak_direct(chain, ctx, &m1);
        double g2 = gamma_weak_factored(chain, ctx, &m2);
        CHECK(std::abs(g1 - g2) < 1e-10);
        CHECK(m2.live() == 0);
        long nnz = gamma_nonzero_count(chain);
        CHECK(nnz >= (1L << k));
        CHECK(m1.peak() == nnz);
        if (prev_nnz) CHECK(nnz >= 2 * prev_nnz);
        prev_nnz = nnz;
        ks.push_back(k);
        peaks.push_back(static_cast<double>(m2.peak()));
    }
    LinearFit fit = linear_regression(ks, peaks);
    for (std::size_t i = 0; i < ks.size(); ++i)
        CHECK(std::abs(peaks[i] - (fit.intercept + fit.slope * ks[i])) < 0.1 * peaks[i]);
}

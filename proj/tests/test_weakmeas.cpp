#include <chrono>

#include "doctest.h"
#include "otoclab/weakmeas.hpp"
#include "test_util.hpp"

using namespace otoclab;
using namespace testutil;

TEST_CASE("kraus pairs") {
    Mat proj = eigenprojector(site_pauli(2, 1, PauliAxis::z), 1.0);
    Mat id = Mat::Identity(4, 4);
    for (auto mode : {PhaseMode::real, PhaseMode::imaginary}) {
        auto k = kraus_pair(proj, {0.1, mode});
        CHECK(max_abs(k.plus.adjoint() * k.plus + k.minus.adjoint() * k.minus - id) < 1e-12);
        auto z = kraus_pair(proj, {0.0, mode});
        CHECK(max_abs(z.plus - id / std::sqrt(2.0)) < 1e-15);
    }
    // M = sqrt(p) 1 + g P with g imaginary to first order
    auto im = kraus_pair(proj, {1e-4, PhaseMode::imaginary});
    cplx g = (im.plus - im.plus(3, 3) * id)(0, 0);
    CHECK(std::abs(g.real()) < 1e-8);
    CHECK(std::abs(g.imag() + 1e-4 / std::sqrt(2.0)) < 1e-10);
    auto re = kraus_pair(proj, {0.3, PhaseMode::real});
    CHECK(max_abs(re.plus - re.plus.real().cast<cplx>()) == 0.0);

    // the positive polar part of M+ is a partial projection
    PartialProjection pp{(1 + std::sin(0.3)) / 2, proj, id - proj};
    CHECK(max_abs(polar_positive_part(re.plus) - pp.d_plus()) < 1e-12);
    CHECK(max_abs(polar_positive_part(re.minus) - pp.d_minus()) < 1e-12);
    CHECK(max_abs(pp.d_plus() * pp.d_plus() + pp.d_minus() * pp.d_minus() - id) < 1e-12);
    PartialProjection half{0.5, proj, id - proj};
    CHECK(max_abs(polar_positive_part(im.plus) - half.d_plus()) < 1e-12);
    CHECK_THROWS_AS(kraus_pair(0.5 * proj, {0.1, PhaseMode::real}), ConfigError);
}

TEST_CASE("ancilla subcircuit") {
    Mat proj = eigenprojector(site_pauli(2, 2, PauliAxis::x), 1.0);
    Mat id = Mat::Identity(4, 4);
    auto zero = ancilla_subcircuit_kraus(proj, 0.0);
    CHECK(max_abs(zero.plus - id / std::sqrt(2.0)) < 1e-15);
    CHECK(max_abs(zero.minus - id / std::sqrt(2.0)) < 1e-15);
    auto strong = ancilla_subcircuit_kraus(proj, M_PI / 2);
    CHECK(max_abs(strong.plus - proj) < 1e-15);
    auto k = ancilla_subcircuit_kraus(proj, 0.2);
    PartialProjection pp{(1 + std::sin(0.2)) / 2, proj, id - proj};
    CHECK(max_abs(k.plus - pp.d_plus()) < 1e-12);
    CHECK(max_abs(k.minus - pp.d_minus()) < 1e-12);
    CHECK(max_abs(k.plus - kraus_pair(proj, {0.2, PhaseMode::real}).plus) < 1e-12);
    // off the symmetric angle the pair is no longer of the p = q form
    auto skew = ancilla_subcircuit_kraus(proj, 0.2, 1.0);
    CHECK(max_abs(skew.plus.adjoint() * skew.plus + skew.minus.adjoint() * skew.minus - id) < 1e-12);
    CHECK(max_abs(skew.plus - k.plus) > 1e-3);
}

TEST_CASE("protocol distribution") {
    Mat h = nonintegrable(2);
    Evolver ev(h);
    Mat w = site_pauli(2, 1, PauliAxis::z), v = site_pauli(2, 2, PauliAxis::z);
    std::mt19937_64 rng(3);
    Mat rho = random_density_matrix(4, rng);

    auto flat = simulate_protocol(rho, w, v, ev, 1.0, {{0.0, PhaseMode::real}}, 0, 1);
    Mat rt = ev.propagator(1.0) * rho * ev.propagator(1.0).adjoint();
    for (long s = 0; s < 8; ++s)
        for (long f = 0; f < 2; ++f) {
            double born = (eigenprojector(w, flat.final_values[f]) * rt).trace().real();
            CHECK(std::abs(flat.probs[flat.bin(0, s, f)] - born / 8) < 1e-12);
        }

    std::vector<CouplingConfig> mixed{{0.3, PhaseMode::real}, {0.3, PhaseMode::imaginary}, {0.3, PhaseMode::real}};
    auto ex = simulate_protocol(rho, w, v, ev, 1.0, mixed, 0, 1);
    auto direct = protocol_probabilities_direct(rho, w, v, ev, 1.0, mixed);
    double tot = 0;
    for (std::size_t b = 0; b < ex.probs.size(); ++b) {
        CHECK(std::abs(ex.probs[b] - direct[b]) < 1e-12);
        tot += ex.probs[b];
    }
    CHECK(std::abs(tot - 1) < 1e-12);

    auto sampled = simulate_protocol(rho, w, v, ev, 1.0, mixed, 1000000, 99);
    for (std::size_t b = 0; b < ex.probs.size(); ++b) {
        double sd = std::sqrt(ex.probs[b] * (1 - ex.probs[b]) / 1e6);
        CHECK(std::abs(sampled.probs[b] - ex.probs[b]) <= 4 * sd + 1e-12);
    }
    auto again = simulate_protocol(rho, w, v, ev, 1.0, mixed, 1000, 99);
    auto again2 = simulate_protocol(rho, w, v, ev, 1.0, mixed, 1000, 99);
    CHECK(again.counts == again2.counts);
}

TEST_CASE("exact-mode inference reproduces the direct quasiprobability") {
    Mat h = nonintegrable(2);
    Evolver ev(h);
    Mat w = site_pauli(2, 1, PauliAxis::z), v = site_pauli(2, 2, PauliAxis::x);
    std::mt19937_64 rng(6);
    Mat rho = random_density_matrix(4, rng);
    auto runs = run_inference_batch(rho, w, v, ev, 1.0, {0.05, 0.1, 0.15, 0.2}, 0, 0);
    auto inf = infer_coarse_quasiprob(runs, spectral_decomposition(w), spectral_decomposition(v));
    auto direct = coarse_quasiprob(rho, w, v, ev, 1.0);
    for (long f = 0; f < 16; ++f) CHECK(std::abs(inf.quasi.values[f] - direct.values[f]) < 1e-8);
    CHECK(inf.max_condition < 1e8);
}

TEST_CASE("inference rejects unusable input") {
    Mat h = nonintegrable(2);
    Evolver ev(h);
    Mat w = site_pauli(2, 1, PauliAxis::z), v = site_pauli(2, 2, PauliAxis::z);
    Mat rho = maximally_mixed(2);
    auto ws = spectral_decomposition(w), vs = spectral_decomposition(v);
    CHECK_THROWS_AS(infer_coarse_quasiprob(run_inference_batch(rho, w, v, ev, 1.0, {0.0}, 0, 0), ws, vs), ConfigError);
    CHECK_THROWS_AS(infer_coarse_quasiprob(run_inference_batch(rho, w, v, ev, 1.0, {0.1, 0.2}, 0, 0), ws, vs),
                    ConfigError);
    CHECK_THROWS_AS(infer_coarse_quasiprob(run_inference_batch(rho, w, v, ev, 1.0, {0.1, 0.1 + 1e-7, 0.1 + 2e-7}, 0, 0), ws, vs),
                    ConfigError);
}

TEST_CASE("two-measurement protocol") {
    Mat h = nonintegrable(2);
    Evolver ev(h);
    Mat w = site_pauli(2, 1, PauliAxis::z), v = site_pauli(2, 2, PauliAxis::x);
    auto ws = spectral_decomposition(w), vs = spectral_decomposition(v);
    std::vector<double> phis{0.05, 0.1, 0.15, 0.2};
    auto direct = coarse_quasiprob(maximally_mixed(2), w, v, ev, 1.0);
    auto inf = infer_coarse_quasiprob(run_inference_batch(maximally_mixed(2), w, v, ev, 1.0, phis, 0, 0, true), ws, vs);
    for (long f = 0; f < 16; ++f) CHECK(std::abs(inf.quasi.values[f] - direct.values[f]) < 1e-8);

    // W(t)-diagonal state takes the other branch
    Mat pt = ev.heisenberg(eigenprojector(w, 1.0), 1.0);
    Mat rho_w = 0.35 * pt / 2.0 + 0.65 * (Mat::Identity(4, 4) - pt) / 2.0;
    auto hist = two_measurement_protocol(rho_w, w, v, ev, 1.0, {{0.1, PhaseMode::real}}, 0, 0);
    CHECK(hist.kind == ProtocolKind::two_weak_w);
    auto inf_w = infer_coarse_quasiprob(run_inference_batch(rho_w, w, v, ev, 1.0, phis, 0, 0, true), ws, vs);
    auto direct_w = coarse_quasiprob(rho_w, w, v, ev, 1.0);
    for (long f = 0; f < 16; ++f) CHECK(std::abs(inf_w.quasi.values[f] - direct_w.values[f]) < 1e-8);

    // strong limit: Born chain
    Mat rho_v = eigenprojector(v, 1.0) / 2.0;
    auto strong = two_measurement_protocol(rho_v, w, v, ev, 1.0, {{M_PI / 2, PhaseMode::real}}, 0, 0);
    double tot = 0;
    for (double p : strong.probs) tot += p;
    CHECK(std::abs(tot - strong.n_prep()) < 1e-12);
    Mat u = ev.propagator(1.0);
    Mat pw = eigenprojector(w, 1.0), qv = eigenprojector(v, 1.0);
    // prep v=+1, weak W outcome +, weak V outcome +, final w=+1
    Mat s1 = pw * u * rho_v * u.adjoint() * pw;
    Mat s2 = qv * u.adjoint() * s1 * u * qv;
    double chain = (pw * u * s2 * u.adjoint()).trace().real();
    CHECK(std::abs(strong.probs[strong.bin(1, 0, 1)] - chain) < 1e-12);

    std::mt19937_64 rng(2);
    CHECK_THROWS_AS(two_measurement_protocol(random_density_matrix(4, rng), w, v, ev, 1.0, {{0.1, PhaseMode::real}}, 0, 0),
                    ConfigError);
}

TEST_CASE("sampled inference at infinite temperature has no significant imaginary part") {
    Mat h = nonintegrable(2);
    Evolver ev(h);
    Mat w = site_pauli(2, 1, PauliAxis::z), v = site_pauli(2, 2, PauliAxis::z);
    auto runs = run_inference_batch(maximally_mixed(2), w, v, ev, 1.0, {0.4, 0.6, 0.8}, 200000, 5);
    auto inf = infer_coarse_quasiprob(runs, spectral_decomposition(w), spectral_decomposition(v));
    for (long f = 0; f < 16; ++f) {
        CHECK(inf.sigma_im[f] > 0);
        CHECK(std::abs(inf.quasi.values[f].imag()) <= 4 * inf.sigma_im[f]);
    }
}

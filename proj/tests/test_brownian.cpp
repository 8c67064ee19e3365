#include <cmath>

#include "doctest.h"
#include "otoclab/brownian.hpp"
#include "otoclab/stats.hpp"
#include "test_util.hpp"

using namespace otoclab;
using namespace testutil;

TEST_CASE("increment moments") {
    BrownianConfig c;
    c.n = 3;
    BrownianSampler sampler(c.n);
    CHECK(sampler.terms() == 3 * 16);
    std::mt19937_64 rng(7);
    RunningStats mean01, mean_diag, sq00, sq01;
    double herm = 0;
    for (int s = 0; s < 10000; ++s) {
        Mat db = sampler.sample(c.dt, rng);
        herm = std::max(herm, max_abs(db - db.adjoint()));
        mean01.add(db(0, 1).real());
        mean_diag.add(db(3, 3).real());
        Mat sq = db * db;
        sq00.add(sq(0, 0).real());
        sq01.add(std::abs(sq(0, 5)));
    }
    CHECK(herm < 1e-12);
    CHECK(std::abs(mean01.mean()) < 3 * mean01.standard_error());
    CHECK(std::abs(mean_diag.mean()) < 3 * mean_diag.standard_error());
    // (N(N-1)/2) pairs x 16 strings x 1/(8(N-1)) = N
    CHECK(std::abs(sq00.mean() - c.n * c.dt) < 3 * sq00.standard_error());
}

TEST_CASE("single step reproduces the Ito drift") {
    const int n = 3;
    const double dt = 0.005;
    BrownianSampler sampler(n);
    std::mt19937_64 rng(11);
    Mat id = Mat::Identity(8, 8);
    CHECK(max_abs(step_unitary(id, Mat::Zero(8, 8)) - id) == 0.0);
    RunningStats re00, im00, off;
    for (int s = 0; s < 10000; ++s) {
        Mat u = step_unitary(id, sampler.sample(dt, rng));
        re00.add(u(0, 0).real());
        im00.add(u(0, 0).imag());
        off.add(u(2, 6).real());
    }
    CHECK(std::abs(re00.mean() - (1 - n * dt / 2)) < 3 * re00.standard_error());
    CHECK(std::abs(im00.mean()) < 3 * im00.standard_error());
    CHECK(std::abs(off.mean()) < 3 * off.standard_error());
}

TEST_CASE("long trajectory stays unitary") {
    BrownianConfig c;
    c.n = 3;
    c.steps = 10000;
    c.trajectories = 1;
    c.sample_every = 10000;
    long calls = 0;
    double defect = run_trajectories(c, [&](long, long, double, const Mat&) { ++calls; });
    CHECK(defect <= 1e-8);
    CHECK(calls == 2);
}

TEST_CASE("config validation") {
    BrownianConfig c;
    c.dt = 0.02;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = BrownianConfig{};
    c.n = 9;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = BrownianConfig{};
    c.n = 1;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = BrownianConfig{};
    c.trajectories = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = BrownianConfig{};
    c.n = 3;
    Mat bad = Mat::Identity(8, 8) * 2.0;
    CHECK_THROWS_AS(ensemble_averages(c, maximally_mixed(3), bad, site_pauli(3, 2, PauliAxis::z)), ConfigError);
}

TEST_CASE("ensemble at infinite temperature") {
    BrownianConfig c;
    c.n = 4;
    c.steps = 200;
    c.sample_every = 20;
    c.trajectories = 100;
    Mat w = site_pauli(4, 1, PauliAxis::z), v = site_pauli(4, 2, PauliAxis::z);
    EnsembleResult r = ensemble_averages(c, maximally_mixed(4), w, v);
    CHECK(r.has_standard_error);
    CHECK(r.max_unitarity_defect <= 1e-8);
    const auto& f = r.series.at("F");
    CHECK(std::abs(f.mean[0] - 1.0) < 1e-14);
    CHECK(f.standard_error[0] < 1e-14);
    const auto& g = r.series.at("G");
    for (std::size_t i = 0; i < g.times.size(); ++i)
        CHECK(std::abs(g.mean[i].real()) <= 3 * g.se_re[i] + 1e-14);

    // per-trajectory Ã at 1/d depends on F and G only; its mean obeys the closed form once G averages out
    for (std::size_t i = 0; i < r.times.size(); ++i)
        for (long flat = 0; flat < 16; ++flat) {
            double v1 = (flat >> 3) & 1 ? 1.0 : -1.0, w2 = (flat >> 2) & 1 ? 1.0 : -1.0;
            double v2 = (flat >> 1) & 1 ? 1.0 : -1.0, w3 = flat & 1 ? 1.0 : -1.0;
            double expect = analytic_avg_quasiprob(w2, w3, v1, v2, f.mean[i].real());
            const auto& q = r.quasi[flat];
            double tol = 3 * (q.se_re[i] + std::abs(w2 * w3 * v1 * v2) * f.se_re[i] / 16) + 1e-14;
            CHECK(std::abs(q.mean[i].real() - expect) <= tol);
        }

    // the autocorrelator decays as e^{-2t}
    const auto& ac = r.series.at("autocorrelator");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < ac.times.size(); ++i) {
        x.push_back(ac.times[i]);
        y.push_back(std::log(ac.mean[i].real()));
    }
    LinearFit fit = linear_regression(x, y);
    CHECK(std::abs(fit.slope + 2) < 0.4);
    CHECK(fit.r2 >= 0.99);
}

TEST_CASE("single trajectory has no standard error") {
    BrownianConfig c;
    c.n = 2;
    c.steps = 20;
    c.trajectories = 1;
    EnsembleResult r = ensemble_averages(c, maximally_mixed(2), site_pauli(2, 1, PauliAxis::z),
                                         site_pauli(2, 2, PauliAxis::z));
    CHECK_FALSE(r.has_standard_error);
}

TEST_CASE("closed-form averages") {
    CHECK(analytic_avg_quasiprob(1, 1, 1, 1, 1.0) == doctest::Approx(0.25));
    for (int bits = 0; bits < 16; ++bits) {
        double w3 = sgn(bits & 1), v2 = sgn(bits & 2), w2 = sgn(bits & 4), v1 = sgn(bits & 8);
        double a1 = analytic_avg_quasiprob(w2, w3, v1, v2, 1.0);
        if (w2 * w3 < 0 || v1 * v2 < 0) CHECK(a1 == 0.0);
        double a0 = analytic_avg_quasiprob(w2, w3, v1, v2, 0.0);
        double expect = w2 * w3 > 0 ? (v1 * v2 > 0 ? 3.0 / 16 : 1.0 / 16) : (v1 * v2 > 0 ? 1.0 / 16 : -1.0 / 16);
        CHECK(a0 == expect);
    }
}

TEST_CASE("general-state average against the ensemble") {
    // D_k = direct Ã_k - formula(f12_k, F_k) has zero mean because E[W(t)] = e^{-2t} W exactly
    const int n = 4;
    BrownianConfig c;
    c.n = n;
    c.steps = 200;
    c.sample_every = 50;
    c.trajectories = 400;
    c.seed = 3;
    Mat w = site_pauli(n, 1, PauliAxis::z), v = site_pauli(n, 2, PauliAxis::z);
    std::mt19937_64 rng(5);
    Mat rho = random_density_matrix(1L << n, rng);
    std::vector<double> times = sample_times(c);
    std::vector<std::vector<ComplexRunningStats>> diff(times.size(), std::vector<ComplexRunningStats>(16));
    run_trajectories(c, [&](long, long s, double t, const Mat& u) {
        auto cor = pauli_correlators_of(rho, u.adjoint() * w * u, v);
        for (int bits = 0; bits < 16; ++bits) {
            double w3 = sgn(bits & 1), v2 = sgn(bits & 2), w2 = sgn(bits & 4), v1 = sgn(bits & 8);
            cplx direct = quasi_from_correlators(cor, v1, w2, v2, w3);
            diff[s][bits].add(direct - general_state_avg(rho, w, v, t, cor[5], cor[7], v1, w2, v2, w3));
        }
    });
    int outside = 0, total = 0;
    for (std::size_t s = 1; s < times.size(); ++s)
        for (int bits = 0; bits < 16; ++bits) {
            const auto& st = diff[s][bits];
            total += 2;
            if (std::abs(st.mean().real()) > 3 * st.se_re() + 1e-14) ++outside;
            if (std::abs(st.mean().imag()) > 3 * st.se_im() + 1e-14) ++outside;
        }
    // correlated 3-sigma checks: allow the expected handful of excursions
    CHECK(outside <= total / 20);
}

TEST_CASE("sigma2z eigenstate forbids v1 = -1") {
    const int n = 3;
    Mat w = site_pauli(n, 1, PauliAxis::z), v = site_pauli(n, 2, PauliAxis::z);
    Mat id = Mat::Identity(8, 8);
    // plus-x on sites 1 and 3, |0> on site 2
    Mat rho = product_plus_x_state(n);
    Mat p = (id + v) / 2.0;
    rho = p * rho * p;
    rho /= rho.trace().real();
    BrownianConfig c;
    c.n = n;
    c.steps = 100;
    c.sample_every = 50;
    c.trajectories = 20;
    EnsembleResult r = ensemble_averages(c, rho, w, v);
    for (std::size_t s = 0; s < r.times.size(); ++s) {
        cplx f12 = r.series.at("f12").mean[s], f = r.series.at("F").mean[s];
        for (int bits = 0; bits < 16; ++bits) {
            double w3 = sgn(bits & 1), v2 = sgn(bits & 2), w2 = sgn(bits & 4), v1 = sgn(bits & 8);
            cplx a = general_state_avg(rho, w, v, r.times[s], f12, f, v1, w2, v2, w3);
            if (v1 < 0) CHECK(std::abs(a) < 1e-12);
            // ensemble layout uses bit 1 for eigenvalue +1
            if (v1 < 0) CHECK(std::abs(r.quasi[bits ^ 15].mean[s]) < 1e-12);
        }
    }
}

TEST_CASE("phenomenological otoc") {
    CHECK(phenomenological_otoc(0.0, 0.1, 1.0) == 1.0);
    CHECK(phenomenological_otoc(20.0, 0.1, 1.0) < 1e-20);
    double prev = 2;
    for (double t = -2; t < 5; t += 0.25) {
        double f = phenomenological_otoc(t, 0.05, 2.0);
        CHECK(f < prev);
        prev = f;
    }
    CHECK_THROWS_AS(phenomenological_otoc(1.0, 0.0, 1.0), ConfigError);
    // half-decay time by bisection approaches (1/3) ln(1/c1)
    auto half_time = [](double c1) {
        double lo = 0, hi = 50;
        for (int it = 0; it < 200; ++it) {
            double mid = (lo + hi) / 2;
            (phenomenological_otoc(mid, c1, 1.0) > 0.5 ? lo : hi) = mid;
        }
        return lo;
    };
    double prev_gap = 1e9;
    for (double c1 : {1e-2, 1e-4, 1e-6, 1e-8}) {
        double gap = std::abs(half_time(c1) - std::log(1 / c1) / 3);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-7);
}

#include "otoclab/weakmeas.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace otoclab {

Mat PartialProjection::d_plus() const {
    return std::sqrt(p) * plus_projector + std::sqrt(1 - p) * minus_projector;
}

Mat PartialProjection::d_minus() const {
    return std::sqrt(1 - p) * plus_projector + std::sqrt(p) * minus_projector;
}

namespace {

void check_projector(const Mat& proj) {
    if (proj.rows() != proj.cols()) throw ConfigError("projector must be square");
    if (!is_hermitian(proj) || max_abs(proj * proj - proj) > 1e-10)
        throw ConfigError("weak measurement needs a Hermitian idempotent projector");
}

void check_completeness(const KrausPair& k) {
    const long d = k.plus.rows();
    Mat s = k.plus.adjoint() * k.plus + k.minus.adjoint() * k.minus;
    if (max_abs(s - Mat::Identity(d, d)) > 1e-12) throw NumericError("Kraus pair is not complete");
}

}  // namespace

KrausPair kraus_pair(const Mat& proj, const CouplingConfig& c) {
    check_projector(proj);
    const long d = proj.rows();
    Mat id = Mat::Identity(d, d);
    KrausPair k;
    if (c.mode == PhaseMode::real) {
        double s = std::sin(c.phi);
        double ap = std::sqrt((1 + s) / 2), am = std::sqrt((1 - s) / 2);
        k.plus = am * id + (ap - am) * proj;
        k.minus = ap * id + (am - ap) * proj;
    } else {
        k.plus = (id + (std::exp(-I * c.phi) - 1.0) * proj) / std::sqrt(2.0);
        k.minus = (id + (std::exp(I * c.phi) - 1.0) * proj) / std::sqrt(2.0);
    }
    check_completeness(k);
    return k;
}

KrausPair ancilla_subcircuit_kraus(const Mat& proj, double phi, double theta0) {
    check_projector(proj);
    if (theta0 < 0 || theta0 > M_PI) throw ConfigError("base angle must lie in [0, pi]");
    const long d = proj.rows();
    Mat id = Mat::Identity(d, d);
    auto ry = [](double th) {
        Mat r(2, 2);
        r << std::cos(th / 2), -std::sin(th / 2), std::sin(th / 2), std::cos(th / 2);
        return r;
    };
    // system (slow index) x ancilla
    Mat cr = kron(proj, ry(theta0 + phi)) + kron(id - proj, ry(theta0 - phi));
    Mat in = Mat::Zero(2 * d, d);  // |psi> -> |psi>|0>
    for (long i = 0; i < d; ++i) in(2 * i, i) = 1.0;
    Mat out0 = Mat::Zero(d, 2 * d), out1 = Mat::Zero(d, 2 * d);
    for (long i = 0; i < d; ++i) {
        out0(i, 2 * i) = 1.0;
        out1(i, 2 * i + 1) = 1.0;
    }
    KrausPair k{out1 * cr * in, out0 * cr * in};
    check_completeness(k);
    return k;
}

Mat polar_positive_part(const Mat& m) {
    Eigensystem es = eigh(m.adjoint() * m);
    RVec s = es.values.cwiseMax(0.0).cwiseSqrt();
    return es.vectors * s.cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

// ---- simulation ------------------------------------------------------------

namespace {

struct Step {
    bool weak = false;
    Mat unitary;
    KrausPair kraus;
};

Mat weak_projector(const Spectral& s, const char* name) {
    if (s.values.size() != 2)
        throw ConfigError(std::string("weak-measurement inference needs ") + name +
                          " with exactly two distinct eigenvalues");
    return s.projectors.back();
}

void check_state(const Mat& sigma) {
    if (std::abs(sigma.trace() - 1.0) > 1e-10 || !is_hermitian(sigma, 1e-10))
        throw NumericError("conditional state lost normalization or Hermiticity");
    if (sigma.rows() <= 64) {
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sigma + sigma.adjoint()), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10) throw NumericError("conditional state is not positive");
    }
}

// Outcome tree of one preparation. joint[depth][prefix] is the probability of
// the first `depth` weak outcomes, finals[prefix][f] the final-readout
// probabilities conditioned on the full prefix.
struct Tree {
    std::vector<std::vector<double>> joint;
    std::vector<std::vector<double>> finals;
};

Tree build_tree(const Mat& rho, const std::vector<Step>& steps, const std::vector<Mat>& finals) {
    int n_weak = 0;
    for (const auto& s : steps) n_weak += s.weak;
    Tree tree;
    tree.joint.resize(n_weak + 1);
    tree.joint[0] = {1.0};
    std::vector<Mat> states{rho};
    int depth = 0;
    for (const auto& step : steps) {
        if (!step.weak) {
            for (auto& s : states) s = step.unitary * s * step.unitary.adjoint();
            continue;
        }
        std::vector<Mat> next(states.size() * 2);
        tree.joint[depth + 1].assign(states.size() * 2, 0.0);
        for (std::size_t p = 0; p < states.size(); ++p) {
            for (int bit = 0; bit < 2; ++bit) {
                const Mat& m = bit == 0 ? step.kraus.plus : step.kraus.minus;
                Mat child = m * states[p] * m.adjoint();
                double pr = child.trace().real();
                std::size_t idx = p * 2 + bit;
                tree.joint[depth + 1][idx] = tree.joint[depth][p] * pr;
                if (pr > 1e-300) {
                    next[idx] = child / pr;
                    check_state(next[idx]);
                } else {
                    next[idx] = states[p];  // unreachable branch, keep a valid state
                }
            }
        }
        states = std::move(next);
        ++depth;
    }
    for (const auto& s : states) {
        std::vector<double> f;
        for (const auto& proj : finals) f.push_back(std::max(0.0, (proj * s).trace().real()));
        double tot = 0;
        for (double x : f) tot += x;
        for (double& x : f) x /= tot;
        tree.finals.push_back(f);
    }
    return tree;
}

void fill_from_tree(ProtocolHistogram& h, long prep, const Tree& tree, std::uint64_t shots, std::mt19937_64& rng) {
    const long no = h.n_outcomes(), nf = h.n_final();
    if (shots == 0) {
        for (long s = 0; s < no; ++s)
            for (long f = 0; f < nf; ++f) h.probs[h.bin(prep, s, f)] = tree.joint[h.n_weak][s] * tree.finals[s][f];
        return;
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::uint64_t shot = 0; shot < shots; ++shot) {
        long prefix = 0;
        for (int dpt = 0; dpt < h.n_weak; ++dpt) {
            double parent = tree.joint[dpt][prefix];
            double p_plus = parent > 0 ? tree.joint[dpt + 1][prefix * 2] / parent : 0.5;
            prefix = prefix * 2 + (uni(rng) < p_plus ? 0 : 1);
        }
        double u = uni(rng), acc = 0;
        long f = 0;
        for (; f + 1 < nf; ++f) {
            acc += tree.finals[prefix][f];
            if (u < acc) break;
        }
        ++h.counts[h.bin(prep, prefix, f)];
    }
    for (long s = 0; s < no; ++s)
        for (long f = 0; f < nf; ++f)
            h.probs[h.bin(prep, s, f)] = static_cast<double>(h.counts[h.bin(prep, s, f)]) / static_cast<double>(shots);
}

std::vector<CouplingConfig> expand(const std::vector<CouplingConfig>& c, int n) {
    if (c.size() == 1) return std::vector<CouplingConfig>(n, c[0]);
    if (static_cast<int>(c.size()) != n) throw ConfigError("need one coupling per weak measurement");
    return c;
}

ProtocolHistogram empty_hist(ProtocolKind kind, int n_weak, std::vector<double> prep_weights,
                             std::vector<double> final_values, std::uint64_t shots) {
    ProtocolHistogram h;
    h.kind = kind;
    h.n_weak = n_weak;
    h.prep_weights = std::move(prep_weights);
    h.final_values = std::move(final_values);
    h.shots = shots;
    long nb = h.n_prep() * h.bins_per_prep();
    h.probs.assign(nb, 0.0);
    if (shots > 0) h.counts.assign(nb, 0);
    return h;
}

void check_ops(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev) {
    const long d = ev.dim();
    auto ok = [d](const Mat& m) { return m.rows() == d && m.cols() == d; };
    if (!ok(rho) || !ok(w) || !ok(v)) throw ConfigError("operator dimensions do not match the Hamiltonian");
    if (std::abs(rho.trace() - 1.0) > 1e-10) throw ConfigError("state must have unit trace");
}

}  // namespace

ProtocolHistogram simulate_protocol(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                    const std::vector<CouplingConfig>& couplings, std::uint64_t shots,
                                    std::uint64_t seed) {
    check_ops(rho, w, v, ev);
    auto c = expand(couplings, 3);
    Spectral ws = spectral_decomposition(w), vs = spectral_decomposition(v);
    Mat q = weak_projector(vs, "V"), p = weak_projector(ws, "W");
    Mat u = ev.propagator(t);
    std::vector<Step> steps{{true, {}, kraus_pair(q, c[0])}, {false, u, {}},
                            {true, {}, kraus_pair(p, c[1])}, {false, u.adjoint(), {}},
                            {true, {}, kraus_pair(q, c[2])}, {false, u, {}}};
    ProtocolHistogram h = empty_hist(ProtocolKind::three_weak, 3, {1.0}, ws.values, shots);
    std::mt19937_64 rng(seed);
    fill_from_tree(h, 0, build_tree(rho, steps, ws.projectors), shots, rng);
    return h;
}

ProtocolHistogram simulate_protocol(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t,
                                    const CouplingConfig& coupling, std::uint64_t shots, std::uint64_t seed) {
    return simulate_protocol(rho, w, v, Evolver(hamiltonian), t, {coupling}, shots, seed);
}

std::vector<double> protocol_probabilities_direct(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev,
                                                  double t, const std::vector<CouplingConfig>& couplings) {
    check_ops(rho, w, v, ev);
    auto c = expand(couplings, 3);
    Spectral ws = spectral_decomposition(w), vs = spectral_decomposition(v);
    Mat q = weak_projector(vs, "V");
    Mat u = ev.propagator(t);
    Mat pt = u.adjoint() * weak_projector(ws, "W") * u;
    KrausPair k1 = kraus_pair(q, c[0]), k2 = kraus_pair(pt, c[1]), k3 = kraus_pair(q, c[2]);
    auto pick = [](const KrausPair& k, long bit) -> const Mat& { return bit ? k.minus : k.plus; };
    std::vector<double> out;
    for (long s = 0; s < 8; ++s) {
        Mat m = pick(k3, s & 1) * pick(k2, (s >> 1) & 1) * pick(k1, (s >> 2) & 1);
        Mat sigma = m * rho * m.adjoint();
        for (const auto& proj : ws.projectors) out.push_back((u.adjoint() * proj * u * sigma).trace().real());
    }
    return out;
}

ProtocolHistogram two_measurement_protocol(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                           const std::vector<CouplingConfig>& couplings, std::uint64_t shots,
                                           std::uint64_t seed) {
    check_ops(rho, w, v, ev);
    auto c = expand(couplings, 2);
    Spectral ws = spectral_decomposition(w), vs = spectral_decomposition(v);
    Mat q = weak_projector(vs, "V"), p = weak_projector(ws, "W");
    Mat u = ev.propagator(t);
    Mat wt = u.adjoint() * w * u;
    double scale = std::max(1.0, max_abs(rho));
    std::mt19937_64 rng(seed);
    if (max_abs(rho * v - v * rho) <= 1e-10 * scale) {
        std::vector<double> weights;
        std::vector<Mat> preps;
        for (const auto& qv : vs.projectors) {
            Mat part = qv * rho * qv;
            double pr = part.trace().real();
            weights.push_back(pr);
            preps.push_back(pr > 1e-300 ? Mat(part / pr) : qv / qv.trace());
        }
        std::vector<Step> steps{{false, u, {}}, {true, {}, kraus_pair(p, c[0])}, {false, u.adjoint(), {}},
                                {true, {}, kraus_pair(q, c[1])}, {false, u, {}}};
        ProtocolHistogram h = empty_hist(ProtocolKind::two_weak_v, 2, weights, ws.values, shots);
        for (long k = 0; k < h.n_prep(); ++k) fill_from_tree(h, k, build_tree(preps[k], steps, ws.projectors), shots, rng);
        return h;
    }
    if (max_abs(rho * wt - wt * rho) <= 1e-10 * scale) {
        std::vector<double> weights;
        std::vector<Mat> preps;
        for (const auto& pw : ws.projectors) {
            Mat pwt = u.adjoint() * pw * u;
            Mat part = pwt * rho * pwt;
            double pr = part.trace().real();
            weights.push_back(pr);
            // the laboratory prepares the W eigenstate U part U^dagger
            Mat lab = u * part * u.adjoint();
            preps.push_back(pr > 1e-300 ? Mat(lab / pr) : pw / pw.trace());
        }
        std::vector<Step> steps{{false, u.adjoint(), {}}, {true, {}, kraus_pair(q, c[0])}, {false, u, {}},
                                {true, {}, kraus_pair(p, c[1])}, {false, u.adjoint(), {}}};
        ProtocolHistogram h = empty_hist(ProtocolKind::two_weak_w, 2, weights, vs.values, shots);
        for (long k = 0; k < h.n_prep(); ++k) fill_from_tree(h, k, build_tree(preps[k], steps, vs.projectors), shots, rng);
        return h;
    }
    throw ConfigError("two-measurement protocol needs a state that commutes with V or with W(t)");
}

// ---- inference -------------------------------------------------------------

namespace {

using Lin = Eigen::VectorXcd;  // coefficients over every (run, bin)

struct Layout {
    ProtocolKind kind;
    int n_weak;
    long n_prep, n_final, per_run;
    std::vector<double> prep_weights;
};

}  // namespace

InferenceResult infer_coarse_quasiprob(const std::vector<ProtocolRun>& runs, const Spectral& w_spec,
                                       const Spectral& v_spec) {
    if (runs.empty()) throw ConfigError("no protocol runs to infer from");
    if (w_spec.values.size() != 2 || v_spec.values.size() != 2)
        throw ConfigError("inference needs W and V with exactly two distinct eigenvalues");
    const ProtocolHistogram& h0 = runs[0].hist;
    Layout lay{h0.kind, h0.n_weak, h0.n_prep(), h0.n_final(), h0.n_prep() * h0.bins_per_prep(), h0.prep_weights};
    const int n = lay.n_weak;
    const long total = lay.per_run * static_cast<long>(runs.size());

    // group runs by mode assignment (bit j set = imaginary mode at weak step j)
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        if (run.hist.kind != lay.kind || run.hist.n_weak != n || run.hist.n_prep() != lay.n_prep ||
            run.hist.n_final() != lay.n_final)
            throw ConfigError("protocol runs have inconsistent layouts");
        if (static_cast<int>(run.couplings.size()) != n) throw ConfigError("need one coupling per weak step");
        int mask = 0;
        for (int j = 0; j < n; ++j) {
            if (run.couplings[j].phi != run.couplings[0].phi)
                throw ConfigError("all weak steps of one run must share the coupling strength");
            if (run.couplings[j].mode == PhaseMode::imaginary) mask |= 1 << j;
        }
        if (std::abs(std::sin(run.couplings[0].phi)) < 1e-12)
            throw ConfigError("zero-coupling run carries no signal; use nonzero strengths");
        groups[mask].push_back(r);
    }
    for (const auto& [mask, members] : groups) {
        std::vector<double> distinct;
        for (auto r : members) distinct.push_back(runs[r].couplings[0].phi);
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() < 3)
            throw ConfigError("need at least 3 distinct coupling strengths per phase-mode assignment");
    }

    InferenceResult res;
    // G[mask][T][prep * n_final + f]: extrapolated Tr(F_f prod_{j in T} K_j rho_prep)
    std::map<int, std::vector<std::vector<Lin>>> g;
    for (const auto& [mask, members] : groups) {
        const long m = static_cast<long>(members.size());
        double kmax = 0;
        for (auto r : members) kmax = std::max(kmax, std::abs(std::cos(runs[r].couplings[0].phi) - 1));
        auto& gm = g[mask];
        gm.assign(1 << n, std::vector<Lin>(lay.n_prep * lay.n_final, Lin::Zero(total)));
        for (int tset = 0; tset < (1 << n); ++tset) {
            int tsize = __builtin_popcount(tset);
            int deg = std::min(n - tsize, static_cast<int>(m) - 1);
            Eigen::MatrixXd vand(m, deg + 1);
            for (long i = 0; i < m; ++i) {
                double x = (std::cos(runs[members[i]].couplings[0].phi) - 1) / kmax;
                for (int k = 0; k <= deg; ++k) vand(i, k) = std::pow(x, k);
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(vand, Eigen::ComputeThinU | Eigen::ComputeThinV);
            auto sv = svd.singularValues();
            double cond = sv(0) / sv(sv.size() - 1);
            if (!(cond <= 1e8))
                throw ConfigError("ill-conditioned coupling fit; widen the spread of strengths");
            res.max_condition = std::max(res.max_condition, cond);
            // intercept weights: first row of the pseudo-inverse
            Eigen::MatrixXd pinv = svd.solve(Eigen::MatrixXd::Identity(m, m));
            for (long i = 0; i < m; ++i) {
                std::size_t r = members[i];
                double norm = std::pow(std::sin(runs[r].couplings[0].phi), tsize);
                double wgt = pinv(0, i) / norm;
                const ProtocolHistogram& h = runs[r].hist;
                for (long prep = 0; prep < lay.n_prep; ++prep)
                    for (long s = 0; s < h.n_outcomes(); ++s) {
                        double sign = 1;
                        for (int j = 0; j < n; ++j)
                            if ((tset >> j & 1) && (s >> (n - 1 - j) & 1)) sign = -sign;
                        for (long f = 0; f < lay.n_final; ++f)
                            gm[tset][prep * lay.n_final + f](static_cast<long>(r) * lay.per_run + h.bin(prep, s, f)) +=
                                sign * wgt;
                    }
            }
        }
    }

    // L[S][prep * n_final + f] = Tr(F_f prod_{j in S} Pi_j rho_prep), left multiplication in step order
    std::vector<std::vector<Lin>> lsum(1 << n, std::vector<Lin>(lay.n_prep * lay.n_final, Lin::Zero(total)));
    std::vector<std::vector<Lin>> lsig(1 << n, std::vector<Lin>(lay.n_prep * lay.n_final, Lin::Zero(total)));
    for (int sset = 0; sset < (1 << n); ++sset) {
        std::vector<int> members;
        for (int j = 0; j < n; ++j)
            if (sset >> j & 1) members.push_back(j);
        int nchoice = 1;
        for (std::size_t k = 0; k < members.size(); ++k) nchoice *= 3;
        for (int code = 0; code < nchoice; ++code) {
            // choice per member: 0 identity, 1 real contrast, 2 imaginary contrast
            int tset = 0, need_imag = 0, need_real = 0, c = code;
            cplx coef = std::pow(0.5, static_cast<double>(members.size()));
            for (int j : members) {
                int ch = c % 3;
                c /= 3;
                if (ch == 1) {
                    tset |= 1 << j;
                    need_real |= 1 << j;
                } else if (ch == 2) {
                    tset |= 1 << j;
                    need_imag |= 1 << j;
                    coef *= I;
                }
            }
            std::vector<int> ok;
            for (const auto& [mask, _] : g)
                if ((mask & need_imag) == need_imag && (mask & need_real) == 0) ok.push_back(mask);
            if (ok.empty()) throw ConfigError("inference is missing a real/imaginary mode assignment");
            for (std::size_t e = 0; e < lsum[sset].size(); ++e) {
                Lin avg = Lin::Zero(total);
                for (int mask : ok) avg += g[mask][tset][e];
                avg /= static_cast<double>(ok.size());
                lsum[sset][e] += coef * avg;
                if (tset == (1 << n) - 1) lsig[sset][e] += coef * avg;
            }
        }
    }

    // assemble the quasiprobability by inclusion-exclusion over complements
    QuasiDistribution& q = res.quasi;
    q.grain = Grain::coarse;
    q.axes = {{"v1", v_spec.values, {}}, {"w2", w_spec.values, {}}, {"v2", v_spec.values, {}}, {"w3", w_spec.values, {}}};
    std::vector<Lin> entry(16, Lin::Zero(total)), signal(16, Lin::Zero(total));
    std::vector<bool> conj(16, false);
    for (long fl = 0; fl < 16; ++fl) {
        auto idx = q.unflatten(fl);  // v1, w2, v2, w3; index 1 is the projector eigenvalue
        // weak-step order and the index that is read out strongly
        std::vector<long> weak_idx;
        long prep = 0, fin = 0;
        switch (lay.kind) {
            case ProtocolKind::three_weak: weak_idx = {idx[0], idx[1], idx[2]}; fin = idx[3]; break;
            case ProtocolKind::two_weak_v: weak_idx = {idx[1], idx[2]}; prep = idx[0]; fin = idx[3]; break;
            case ProtocolKind::two_weak_w: weak_idx = {idx[2], idx[1]}; prep = idx[3]; fin = idx[0]; conj[fl] = true; break;
        }
        int plus = 0;
        for (int j = 0; j < n; ++j)
            if (weak_idx[j] == 1) plus |= 1 << j;
        for (int sset = 0; sset < (1 << n); ++sset) {
            if ((sset & plus) != plus) continue;
            double sign = (__builtin_popcount(sset & ~plus) % 2) ? -1.0 : 1.0;
            long e = prep * lay.n_final + fin;
            entry[fl] += sign * lsum[sset][e] * lay.prep_weights[prep];
            signal[fl] += sign * lsig[sset][e] * lay.prep_weights[prep];
        }
        if (conj[fl]) {
            entry[fl] = entry[fl].conjugate();
            signal[fl] = signal[fl].conjugate();
        }
    }

    // evaluate, with multinomial error propagation per run
    q.values.resize(16);
    res.sigma_re.assign(16, 0.0);
    res.sigma_im.assign(16, 0.0);
    res.background.resize(16);
    Eigen::VectorXd freq(total);
    for (std::size_t r = 0; r < runs.size(); ++r)
        for (long b = 0; b < lay.per_run; ++b) freq(static_cast<long>(r) * lay.per_run + b) = runs[r].hist.probs[b];
    for (long fl = 0; fl < 16; ++fl) {
        q.values[fl] = (entry[fl].array() * freq.cast<cplx>().array()).sum();
        cplx sig = (signal[fl].array() * freq.cast<cplx>().array()).sum();
        res.background[fl] = q.values[fl] - sig;
        double vre = 0, vim = 0;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            const ProtocolHistogram& h = runs[r].hist;
            if (h.shots == 0) continue;
            for (long prep = 0; prep < lay.n_prep; ++prep) {
                double m1r = 0, m2r = 0, m1i = 0, m2i = 0;
                for (long b = prep * h.bins_per_prep(); b < (prep + 1) * h.bins_per_prep(); ++b) {
                    long k = static_cast<long>(r) * lay.per_run + b;
                    double p = freq(k);
                    m1r += entry[fl](k).real() * p;
                    m2r += entry[fl](k).real() * entry[fl](k).real() * p;
                    m1i += entry[fl](k).imag() * p;
                    m2i += entry[fl](k).imag() * entry[fl](k).imag() * p;
                }
                vre += (m2r - m1r * m1r) / static_cast<double>(h.shots);
                vim += (m2i - m1i * m1i) / static_cast<double>(h.shots);
            }
        }
        res.sigma_re[fl] = std::sqrt(std::max(0.0, vre));
        res.sigma_im[fl] = std::sqrt(std::max(0.0, vim));
    }
    return res;
}

std::vector<ProtocolRun> run_inference_batch(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                             const std::vector<double>& phis, std::uint64_t shots,
                                             std::uint64_t seed, bool two_measurements) {
    const int n = two_measurements ? 2 : 3;
    std::vector<ProtocolRun> runs;
    std::uint64_t stream = 0;
    for (int mask = 0; mask < (1 << n); ++mask)
        for (double phi : phis) {
            ProtocolRun run;
            for (int j = 0; j < n; ++j)
                run.couplings.push_back({phi, (mask >> j & 1) ? PhaseMode::imaginary : PhaseMode::real});
            std::uint64_t s = substream_seed(seed, stream++);
            run.hist = two_measurements ? two_measurement_protocol(rho, w, v, ev, t, run.couplings, shots, s)
                                        : simulate_protocol(rho, w, v, ev, t, run.couplings, shots, s);
            runs.push_back(std::move(run));
        }
    return runs;
}

}  // namespace otoclab

#include "otoclab/quasiprob.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>

namespace otoclab {

// ---- Evolver ---------------------------------------------------------------

Evolver::Evolver(const Mat& hamiltonian) : es_(eigh(hamiltonian)) {}
Evolver::Evolver(Eigensystem es) : es_(std::move(es)) {}

Mat Evolver::propagator(double t) const {
    Vec ph(dim());
    for (long i = 0; i < dim(); ++i) ph(i) = std::exp(-I * es_.values(i) * t);
    return es_.vectors * ph.asDiagonal() * es_.vectors.adjoint();
}

Mat Evolver::heisenberg(const Mat& op, double t) const {
    Mat u = propagator(t);
    return u.adjoint() * op * u;
}

// ---- QuasiDistribution -----------------------------------------------------

long QuasiDistribution::flat_index(const std::vector<long>& idx) const {
    if (idx.size() != axes.size()) throw ConfigError("quasi index has wrong arity");
    long flat = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (idx[a] < 0 || idx[a] >= axes[a].size()) throw ConfigError("quasi index out of range");
        flat = flat * axes[a].size() + idx[a];
    }
    return flat;
}

std::vector<long> QuasiDistribution::unflatten(long flat) const {
    std::vector<long> idx(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
        idx[a] = flat % axes[a].size();
        flat /= axes[a].size();
    }
    return idx;
}

cplx QuasiDistribution::value(const std::vector<double>& eigenvalues) const {
    if (eigenvalues.size() != axes.size()) throw ConfigError("quasi lookup has wrong arity");
    std::vector<long> idx(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a) {
        long found = -1;
        for (long k = 0; k < axes[a].size(); ++k)
            if (std::abs(axes[a].values[k] - eigenvalues[a]) <= 1e-9) { found = k; break; }
        if (found < 0) throw ConfigError("quasi lookup: eigenvalue not on axis " + axes[a].name);
        idx[a] = found;
    }
    if (grain == Grain::fine) {
        cplx s = 0.0;
        for (long f = 0; f < static_cast<long>(values.size()); ++f) {
            auto j = unflatten(f);
            bool match = true;
            for (std::size_t a = 0; a < axes.size() && match; ++a)
                match = std::abs(axes[a].values[j[a]] - eigenvalues[a]) <= 1e-9;
            if (match) s += values[f];
        }
        return s;
    }
    return at(idx);
}

long QuasiDistribution::axis_index(const std::string& name) const {
    for (std::size_t a = 0; a < axes.size(); ++a)
        if (axes[a].name == name) return static_cast<long>(a);
    throw ConfigError("quasi distribution has no axis named " + name);
}

cplx QuasiDistribution::sum() const {
    cplx s = 0.0;
    for (const auto& x : values) s += x;
    return s;
}

cplx WorkDistribution::at(double wv, double wpv) const {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (std::abs(w[i] - wv) <= 1e-9 && std::abs(w_prime[i] - wpv) <= 1e-9) return values[i];
    return 0.0;
}

cplx WorkDistribution::sum() const {
    cplx s = 0.0;
    for (const auto& x : values) s += x;
    return s;
}

// ---- shared helpers --------------------------------------------------------

namespace {

void check_dims(const Mat& rho, const Mat& w, const Mat& v, long d) {
    auto ok = [d](const Mat& m) { return m.rows() == d && m.cols() == d; };
    if (!ok(rho) || !ok(w) || !ok(v)) throw ConfigError("operator dimensions do not match the Hamiltonian");
}

// Tr(A B) without forming the product.
cplx tr_prod(const Mat& a, const Mat& b) {
    return a.transpose().cwiseProduct(b).sum();
}

QuasiAxis coarse_axis(const std::string& name, const Spectral& s) {
    return QuasiAxis{name, s.values, {}};
}

// Density operator in the most economical form that still gives exact traces.
struct RhoRep {
    enum Kind { scalar, diagonal, pure, general } kind = general;
    cplx c = 0.0;
    RVec diag;
    Vec psi;
    Mat full;
};

RhoRep classify(const Mat& rho) {
    RhoRep r;
    r.full = rho;
    Mat off = rho;
    off.diagonal().setZero();
    double scale = std::max(1e-300, max_abs(rho));
    if (max_abs(off) <= 1e-13 * scale) {
        RVec dg = rho.diagonal().real();
        if ((dg.array() - dg(0)).abs().maxCoeff() <= 1e-13 * scale) {
            r.kind = RhoRep::scalar;
            r.c = dg(0);
        } else {
            r.kind = RhoRep::diagonal;
            r.diag = dg;
        }
        return r;
    }
    cplx purity = tr_prod(rho, rho);
    if (std::abs(purity - 1.0) <= 1e-12 && std::abs(rho.trace() - 1.0) <= 1e-12) {
        long j = 0;
        rho.diagonal().real().maxCoeff(&j);
        Vec psi = rho.col(j) / std::sqrt(rho(j, j).real());
        if (max_abs(psi * psi.adjoint() - rho) <= 1e-12) {
            r.kind = RhoRep::pure;
            r.psi = psi;
            return r;
        }
    }
    return r;
}

// Fill the coarse table from B[w][v] = P_w(t) Q_v. Values are indexed
// (v1, w2, v2, w3) and equal Tr(B[w3][v2] B[w2][v1] rho).
void fill_coarse(QuasiDistribution& q, const std::vector<std::vector<Mat>>& b, const RhoRep& rho) {
    const long nw = static_cast<long>(b.size());
    const long nv = static_cast<long>(b[0].size());
    q.values.assign(nv * nw * nv * nw, 0.0);
    auto put = [&](long iv1, long iw2, long iv2, long iw3, cplx x) {
        q.values[((iv1 * nw + iw2) * nv + iv2) * nw + iw3] = x;
    };
    if (rho.kind == RhoRep::pure) {
        std::vector<std::vector<Vec>> x(nw, std::vector<Vec>(nv)), y(nw, std::vector<Vec>(nv));
        for (long a = 0; a < nw; ++a)
            for (long c = 0; c < nv; ++c) {
                x[a][c] = b[a][c] * rho.psi;
                y[a][c] = b[a][c].adjoint() * rho.psi;
            }
        for (long iv1 = 0; iv1 < nv; ++iv1)
            for (long iw2 = 0; iw2 < nw; ++iw2)
                for (long iv2 = 0; iv2 < nv; ++iv2)
                    for (long iw3 = 0; iw3 < nw; ++iw3)
                        put(iv1, iw2, iv2, iw3, y[iw3][iv2].dot(x[iw2][iv1]));
        return;
    }
    std::vector<std::vector<Mat>> c(nw, std::vector<Mat>(nv));
    for (long a = 0; a < nw; ++a)
        for (long k = 0; k < nv; ++k) {
            switch (rho.kind) {
                case RhoRep::scalar: c[a][k] = b[a][k] * rho.c; break;
                case RhoRep::diagonal: c[a][k] = b[a][k] * rho.diag.cast<cplx>().asDiagonal(); break;
                default: c[a][k].noalias() = b[a][k] * rho.full; break;
            }
        }
    for (long iv1 = 0; iv1 < nv; ++iv1)
        for (long iw2 = 0; iw2 < nw; ++iw2)
            for (long iv2 = 0; iv2 < nv; ++iv2)
                for (long iw3 = 0; iw3 < nw; ++iw3)
                    put(iv1, iw2, iv2, iw3, tr_prod(b[iw3][iv2], c[iw2][iv1]));
}

// B[w][v] = Pt[w] Q[v] using the resolutions of identity to skip the
// products that involve the last projector of either observable.
std::vector<std::vector<Mat>> projector_products(const std::vector<Mat>& pt, const std::vector<Mat>& q) {
    const long nw = static_cast<long>(pt.size());
    const long nv = static_cast<long>(q.size());
    std::vector<std::vector<Mat>> b(nw, std::vector<Mat>(nv));
    for (long a = 0; a + 1 < nw; ++a) {
        Mat rest = pt[a];
        for (long k = 0; k + 1 < nv; ++k) {
            b[a][k].noalias() = pt[a] * q[k];
            rest -= b[a][k];
        }
        b[a][nv - 1] = rest;
    }
    for (long k = 0; k < nv; ++k) {
        Mat rest = q[k];
        for (long a = 0; a + 1 < nw; ++a) rest -= b[a][k];
        b[nw - 1][k] = rest;
    }
    return b;
}

QuasiDistribution otoc_shell(const Spectral& ws, const Spectral& vs) {
    QuasiDistribution q;
    q.grain = Grain::coarse;
    q.axes = {coarse_axis("v1", vs), coarse_axis("w2", ws), coarse_axis("v2", vs), coarse_axis("w3", ws)};
    return q;
}

}  // namespace

// ---- correlators -----------------------------------------------------------

cplx otoc(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    check_dims(rho, w, v, ev.dim());
    Mat wt = ev.heisenberg(w, t);
    Mat left = v * wt;   // (V W(t))^dagger = W(t)^dagger V^dagger
    Mat right = wt * v;
    return (rho * left.adjoint() * right).trace();
}

cplx otoc(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return otoc(rho, w, v, Evolver(hamiltonian), t);
}

double commutator_square(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    check_dims(rho, w, v, ev.dim());
    Mat wt = ev.heisenberg(w, t);
    Mat k = wt * v - v * wt;
    return (rho * k.adjoint() * k).trace().real();
}

double commutator_square(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return commutator_square(rho, w, v, Evolver(hamiltonian), t);
}

// ---- coarse ----------------------------------------------------------------

QuasiDistribution coarse_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    check_dims(rho, w, v, ev.dim());
    Spectral ws = spectral_decomposition(w);
    Spectral vs = spectral_decomposition(v);
    Mat u = ev.propagator(t);
    std::vector<Mat> pt;
    for (const auto& p : ws.projectors) pt.push_back(u.adjoint() * p * u);
    QuasiDistribution q = otoc_shell(ws, vs);
    fill_coarse(q, projector_products(pt, vs.projectors), classify(rho));
    return q;
}

QuasiDistribution coarse_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return coarse_quasiprob(rho, w, v, Evolver(hamiltonian), t);
}

std::vector<cplx> pauli_correlators(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    check_dims(rho, w, v, ev.dim());
    return pauli_correlators_of(rho, ev.heisenberg(w, t), v);
}

std::vector<cplx> pauli_correlators_of(const Mat& rho, const Mat& wt, const Mat& v) {
    Mat wv = wt * v;
    Mat vw = v * wt;
    auto ex = [&](const Mat& x) { return tr_prod(rho, x); };
    return {rho.trace(), ex(wt), ex(v), ex(wv), ex(vw), ex(wv * wt), ex(vw * v), ex(wv * wv)};
}

cplx quasi_from_correlators(const std::vector<cplx>& c, double v1, double w2, double v2, double w3) {
    cplx s = (1 + w2 * w3 + v1 * v2) * c[0];
    s += (w2 + w3 * (1 + v1 * v2)) * c[1];
    s += (v1 * (1 + w2 * w3) + v2) * c[2];
    s += (w2 * v1 + w3 * v1 + w3 * v2) * c[3];
    s += (w2 * v2) * c[4];
    s += (w2 * w3 * v2) * c[5];
    s += (w2 * v1 * v2) * c[6];
    s += (w2 * w3 * v1 * v2) * c[7];
    return s / 16.0;
}

QuasiDistribution coarse_quasiprob_via_correlators(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev,
                                                   double t) {
    check_dims(rho, w, v, ev.dim());
    Mat id = Mat::Identity(ev.dim(), ev.dim());
    if (max_abs(w * w - id) > 1e-12 || max_abs(v * v - id) > 1e-12)
        throw ConfigError("correlator expansion needs W and V that square to the identity");
    auto c = pauli_correlators(rho, w, v, ev, t);
    Spectral pm{{-1.0, 1.0}, {}};
    QuasiDistribution q = otoc_shell(pm, pm);
    q.values.resize(16);
    for (long f = 0; f < 16; ++f) {
        auto i = q.unflatten(f);
        q.values[f] = quasi_from_correlators(c, pm.values[i[0]], pm.values[i[1]], pm.values[i[2]], pm.values[i[3]]);
    }
    return q;
}

QuasiDistribution coarse_quasiprob_via_correlators(const Mat& rho, const Mat& w, const Mat& v,
                                                   const Mat& hamiltonian, double t) {
    return coarse_quasiprob_via_correlators(rho, w, v, Evolver(hamiltonian), t);
}

// ---- fine ------------------------------------------------------------------

namespace {

QuasiAxis fine_axis(const std::string& name, const Eigensystem& es) {
    QuasiAxis ax{name, {}, {}};
    int label = 0;
    for (long i = 0; i < es.values.size(); ++i) {
        if (i > 0 && es.values(i) != es.values(i - 1)) label = 0;
        ax.values.push_back(es.values(i));
        ax.labels.push_back(label++);
    }
    return ax;
}

}  // namespace

QuasiDistribution fine_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    check_dims(rho, w, v, ev.dim());
    const long d = ev.dim();
    if (d > kMaxFineDim)
        throw ConfigError("fine-grained quasiprobability is limited to 6 qubits; use the coarse grain");
    Eigensystem we = eigh(w);
    Eigensystem ve = eigh(v);
    Mat u = ev.propagator(t);
    Mat m = we.vectors.adjoint() * u * ve.vectors;                  // <w|U|v>
    Mat r = ve.vectors.adjoint() * rho * u.adjoint() * we.vectors;  // <v|rho U^dagger|w>
    QuasiDistribution q;
    q.grain = Grain::fine;
    q.axes = {fine_axis("v1", ve), fine_axis("w2", we), fine_axis("v2", ve), fine_axis("w3", we)};
    q.values.resize(static_cast<std::size_t>(d * d * d * d));
    std::size_t f = 0;
    for (long v1 = 0; v1 < d; ++v1)
        for (long w2 = 0; w2 < d; ++w2) {
            cplx a1 = m(w2, v1);
            for (long v2 = 0; v2 < d; ++v2) {
                cplx a2 = a1 * std::conj(m(w2, v2));
                for (long w3 = 0; w3 < d; ++w3) q.values[f++] = m(w3, v2) * a2 * r(v1, w3);
            }
        }
    return q;
}

QuasiDistribution fine_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return fine_quasiprob(rho, w, v, Evolver(hamiltonian), t);
}

QuasiDistribution coarse_grain(const QuasiDistribution& fine) {
    if (fine.grain != Grain::fine) return fine;
    QuasiDistribution q;
    q.grain = Grain::coarse;
    std::vector<std::vector<long>> map(fine.axes.size());
    for (std::size_t a = 0; a < fine.axes.size(); ++a) {
        QuasiAxis ax{fine.axes[a].name, {}, {}};
        for (double x : fine.axes[a].values) {
            if (ax.values.empty() || std::abs(ax.values.back() - x) > 0.0) ax.values.push_back(x);
            map[a].push_back(ax.size() - 1);
        }
        q.axes.push_back(ax);
    }
    long total = 1;
    for (const auto& ax : q.axes) total *= ax.size();
    q.values.assign(total, 0.0);
    for (long f = 0; f < static_cast<long>(fine.values.size()); ++f) {
        auto i = fine.unflatten(f);
        std::vector<long> j(i.size());
        for (std::size_t a = 0; a < i.size(); ++a) j[a] = map[a][i[a]];
        q.values[q.flat_index(j)] += fine.values[f];
    }
    return q;
}

// ---- derived distributions -------------------------------------------------

namespace {

long long bucket(double x) { return std::llround(x * 1e9); }

WorkDistribution bucket_sum(const QuasiDistribution& q,
                            const std::function<std::pair<double, double>(const std::vector<double>&)>& key) {
    std::map<std::pair<long long, long long>, cplx> acc;
    std::vector<double> eig(q.axes.size());
    for (long f = 0; f < static_cast<long>(q.values.size()); ++f) {
        auto i = q.unflatten(f);
        for (std::size_t a = 0; a < i.size(); ++a) eig[a] = q.axes[a].values[i[a]];
        auto k = key(eig);
        acc[{bucket(k.first), bucket(k.second)}] += q.values[f];
    }
    WorkDistribution wd;
    for (const auto& [k, x] : acc) {
        wd.w.push_back(static_cast<double>(k.first) * 1e-9);
        wd.w_prime.push_back(static_cast<double>(k.second) * 1e-9);
        wd.values.push_back(x);
    }
    return wd;
}

}  // namespace

WorkDistribution work_distribution(const QuasiDistribution& quasi) {
    long iv1 = quasi.axis_index("v1"), iw2 = quasi.axis_index("w2");
    long iv2 = quasi.axis_index("v2"), iw3 = quasi.axis_index("w3");
    return bucket_sum(quasi, [=](const std::vector<double>& e) {
        // eigenvalues are real for Hermitian W and V, so conjugation is a no-op
        return std::make_pair(e[iw3] * e[iv2], e[iw2] * e[iv1]);
    });
}

Marginal marginalize(const QuasiDistribution& quasi, long keep) {
    if (keep < 0 || keep >= static_cast<long>(quasi.axes.size())) throw ConfigError("marginalize: bad axis");
    const QuasiAxis& ax = quasi.axes[keep];
    std::vector<cplx> acc(ax.size(), 0.0);
    for (long f = 0; f < static_cast<long>(quasi.values.size()); ++f) acc[quasi.unflatten(f)[keep]] += quasi.values[f];
    Marginal m;
    m.values = ax.values;
    m.labels = ax.labels;
    for (const auto& x : acc) {
        m.probs.push_back(x.real());
        m.max_imag = std::max(m.max_imag, std::abs(x.imag()));
    }
    return m;
}

cplx otoc_moment(const QuasiDistribution& q) {
    long iv1 = q.axis_index("v1"), iw2 = q.axis_index("w2");
    long iv2 = q.axis_index("v2"), iw3 = q.axis_index("w3");
    cplx s = 0.0;
    for (long f = 0; f < static_cast<long>(q.values.size()); ++f) {
        auto i = q.unflatten(f);
        double c = q.axes[iv1].values[i[iv1]] * q.axes[iw2].values[i[iw2]] * q.axes[iv2].values[i[iv2]] *
                   q.axes[iw3].values[i[iw3]];
        s += c * q.values[f];
    }
    return s;
}

cplx work_moment(const WorkDistribution& wd) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < wd.values.size(); ++i) s += wd.w[i] * wd.w_prime[i] * wd.values[i];
    return s;
}

// ---- regulated -------------------------------------------------------------

namespace {

// Diagonal of Z^(-1/4) exp(-i H tau), tau = t - i/(4T), in the energy basis.
Vec regulated_diag(const RVec& e, double temperature, double t) {
    const long d = e.size();
    Vec u(d);
    double e0 = e.minCoeff();
    if (std::isinf(temperature)) {
        double z4 = std::pow(static_cast<double>(d), -0.25);
        for (long i = 0; i < d; ++i) u(i) = z4 * std::exp(-I * e(i) * t);
        return u;
    }
    double z = 0.0;
    for (long i = 0; i < d; ++i) z += std::exp(-(e(i) - e0) / temperature);
    double z4 = std::pow(z, -0.25);
    for (long i = 0; i < d; ++i) u(i) = z4 * std::exp(-(e(i) - e0) / (4 * temperature)) * std::exp(-I * e(i) * t);
    return u;
}

Mat dress(const Mat& op, const Vec& left, const Vec& right) {
    // diag(left) op diag(right)^dagger
    return left.asDiagonal() * op * right.conjugate().asDiagonal();
}

}  // namespace

RegulatedResult regulated_quasiprob_and_otoc(const Evolver& ev, double temperature, const Mat& w, const Mat& v,
                                             double t) {
    if (!(temperature > 0)) throw ConfigError("temperature must be positive");
    const long d = ev.dim();
    check_dims(w, w, v, d);
    const Mat& phi = ev.spectrum().vectors;
    Spectral ws = spectral_decomposition(w);
    Spectral vs = spectral_decomposition(v);
    Vec ut = regulated_diag(ev.spectrum().values, temperature, t);
    std::vector<Mat> p, x;
    for (const auto& pr : ws.projectors) p.push_back(phi.adjoint() * pr * phi);
    for (const auto& qr : vs.projectors) x.push_back(dress(phi.adjoint() * qr * phi, ut, ut));
    const long nw = static_cast<long>(p.size()), nv = static_cast<long>(x.size());
    // y[w][v] = P_w U~ Q_v U~^dagger
    std::vector<std::vector<Mat>> y(nw, std::vector<Mat>(nv));
    for (long k = 0; k < nv; ++k) {
        Mat rest = x[k];
        for (long a = 0; a + 1 < nw; ++a) {
            y[a][k].noalias() = p[a] * x[k];
            rest -= y[a][k];
        }
        y[nw - 1][k] = rest;
    }
    RegulatedResult res;
    res.quasi = otoc_shell(ws, vs);
    res.quasi.values.resize(nv * nw * nv * nw);
    for (long f = 0; f < static_cast<long>(res.quasi.values.size()); ++f) {
        auto i = res.quasi.unflatten(f);
        res.quasi.values[f] = tr_prod(y[i[3]][i[2]], y[i[1]][i[0]]);
    }
    res.f_reg = otoc_moment(res.quasi);
    return res;
}

RegulatedResult regulated_quasiprob_and_otoc(const Mat& hamiltonian, double temperature, const Mat& w,
                                             const Mat& v, double t) {
    return regulated_quasiprob_and_otoc(Evolver(hamiltonian), temperature, w, v, t);
}

cplx regulated_otoc_direct(const Evolver& ev, double temperature, const Mat& w, const Mat& v, double t) {
    Mat rho = thermal_state(ev.spectrum(), temperature);
    Eigensystem rs = eigh(rho);
    Mat r = rs.vectors * rs.values.cwiseMax(0.0).array().pow(0.25).matrix().cast<cplx>().asDiagonal() *
            rs.vectors.adjoint();
    Mat wt = ev.heisenberg(w, t);
    return (r * wt * r * v * r * wt * r * v).trace();
}

// ---- time-ordered ----------------------------------------------------------

TocResult toc_and_toc_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t) {
    check_dims(rho, w, v, ev.dim());
    Mat wt = ev.heisenberg(w, t);
    Mat wtv = wt * v;
    TocResult res;
    res.toc = tr_prod(rho, wtv.adjoint() * wtv);
    Spectral ws = spectral_decomposition(w);
    Spectral vs = spectral_decomposition(v);
    Mat u = ev.propagator(t);
    QuasiDistribution& q = res.quasi;
    q.grain = Grain::coarse;
    q.axes = {coarse_axis("v1", vs), coarse_axis("w1", ws), coarse_axis("v2", vs)};
    const long nw = static_cast<long>(ws.values.size()), nv = static_cast<long>(vs.values.size());
    std::vector<Mat> d2(nv);
    for (long k = 0; k < nv; ++k) d2[k] = rho * vs.projectors[k];
    q.values.resize(nv * nw * nv);
    for (long a = 0; a < nw; ++a) {
        Mat pt = u.adjoint() * ws.projectors[a] * u;
        for (long k1 = 0; k1 < nv; ++k1) {
            Mat b = pt * vs.projectors[k1];
            for (long k2 = 0; k2 < nv; ++k2) q.values[(k1 * nw + a) * nv + k2] = tr_prod(b, d2[k2]);
        }
    }
    res.work = bucket_sum(q, [](const std::vector<double>& e) {
        return std::make_pair(e[1] * e[2], e[1] * e[0]);
    });
    return res;
}

TocResult toc_and_toc_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t) {
    return toc_and_toc_quasiprob(rho, w, v, Evolver(hamiltonian), t);
}

cplx toc_moment(const WorkDistribution& work) {
    return work_moment(work);
}

// ---- k-fold ----------------------------------------------------------------

KfoldResult kfold_otoc_and_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                     int khat) {
    check_dims(rho, w, v, ev.dim());
    if (khat < 2 || khat > kMaxKfold)
        throw ConfigError("k-fold order must lie in [2, " + std::to_string(kMaxKfold) + "]");
    Mat wt = ev.heisenberg(w, t);
    Mat wtv = wt * v;
    Mat power = Mat::Identity(ev.dim(), ev.dim());
    for (int i = 0; i < khat; ++i) power = power * wtv;
    KfoldResult res;
    res.value = tr_prod(rho, power);

    Spectral ws = spectral_decomposition(w);
    Spectral vs = spectral_decomposition(v);
    Mat u = ev.propagator(t);
    std::vector<Mat> pt;
    for (const auto& p : ws.projectors) pt.push_back(u.adjoint() * p * u);
    QuasiDistribution& q = res.quasi;
    q.grain = Grain::coarse;
    long total = 1;
    for (int l = 1; l <= khat; ++l) {
        q.axes.push_back(coarse_axis("v" + std::to_string(l), vs));
        q.axes.push_back(coarse_axis("w" + std::to_string(l + 1), ws));
        total *= static_cast<long>(vs.values.size() * ws.values.size());
    }
    if (total > (1L << 20)) throw ConfigError("k-fold quasiprobability has too many entries");
    q.values.assign(total, 0.0);
    // depth-first over the tuple: left-multiply projectors onto rho
    std::vector<long> idx(2 * khat, 0);
    std::function<void(int, const Mat&)> rec = [&](int depth, const Mat& acc) {
        if (depth == 2 * khat) {
            q.values[q.flat_index(idx)] = acc.trace();
            return;
        }
        const std::vector<Mat>& ops = (depth % 2 == 0) ? vs.projectors : pt;
        for (long k = 0; k < static_cast<long>(ops.size()); ++k) {
            idx[depth] = k;
            rec(depth + 1, ops[k] * acc);
        }
    };
    rec(0, rho);
    return res;
}

KfoldResult kfold_otoc_and_quasiprob(const Mat& rho, const Mat& w, const Mat& v, const Mat& hamiltonian, double t,
                                     int khat) {
    return kfold_otoc_and_quasiprob(rho, w, v, Evolver(hamiltonian), t, khat);
}

cplx kfold_moment(const QuasiDistribution& q) {
    cplx s = 0.0;
    for (long f = 0; f < static_cast<long>(q.values.size()); ++f) {
        auto i = q.unflatten(f);
        double c = 1.0;
        for (std::size_t a = 0; a < i.size(); ++a) c *= q.axes[a].values[i[a]];
        s += c * q.values[f];
    }
    return s;
}

// ---- series engine ---------------------------------------------------------

CoarseSeriesEngine::CoarseSeriesEngine(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev)
    : energies_(ev.spectrum().values), ws_(spectral_decomposition(w)), vs_(spectral_decomposition(v)) {
    check_dims(rho, w, v, ev.dim());
    const Mat& phi = ev.spectrum().vectors;
    for (const auto& p : ws_.projectors) p_.push_back(phi.adjoint() * p * phi);
    for (const auto& q : vs_.projectors) q_.push_back(phi.adjoint() * q * phi);
    // a multiple of the identity stays exact if it skips the basis change
    RhoRep rep = classify(rho);
    if (rep.kind != RhoRep::scalar) rep = classify(phi.adjoint() * rho * phi);
    rho_kind_ = rep.kind;
    scalar_ = rep.c;
    diag_ = rep.diag;
    psi_ = rep.psi;
    if (rep.kind == RhoRep::general) rho_ = rep.full;
}

CoarseSeriesEngine::Point CoarseSeriesEngine::at(double t) const {
    const long d = energies_.size();
    Vec ph(d);
    for (long i = 0; i < d; ++i) ph(i) = std::exp(I * energies_(i) * t);
    // (U^dagger P U)_{mn} = e^{i(E_m - E_n)t} P_{mn}
    std::vector<Mat> pt;
    for (std::size_t a = 0; a + 1 < p_.size(); ++a) pt.push_back(dress(p_[a], ph, ph));
    pt.push_back(Mat());  // last projector only enters through the complement
    auto b = projector_products(pt, q_);
    RhoRep rep;
    rep.kind = static_cast<RhoRep::Kind>(rho_kind_);
    rep.c = scalar_;
    rep.diag = diag_;
    rep.psi = psi_;
    rep.full = rho_;
    Point out{otoc_shell(ws_, vs_), 0.0};
    fill_coarse(out.quasi, b, rep);
    out.otoc = otoc_moment(out.quasi);
    return out;
}

// ---- onset -----------------------------------------------------------------

Onset scrambling_onset(const CorrelatorSeries& s, double threshold) {
    if (s.times.size() != s.values.size()) throw ConfigError("series lengths differ");
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        double re = s.values[i].real();
        if (re < threshold) {
            if (i == 0) return {true, s.times[0]};
            double r0 = s.values[i - 1].real();
            double frac = (r0 - threshold) / (r0 - re);
            return {true, s.times[i - 1] + frac * (s.times[i] - s.times[i - 1])};
        }
    }
    return {false, 0.0};
}

std::vector<double> time_grid(double t_max, double t_step) {
    if (!(t_step > 0) || t_max < 0) throw ConfigError("time grid needs t_step > 0 and t_max >= 0");
    std::vector<double> ts;
    long n = static_cast<long>(std::floor(t_max / t_step + 1e-9));
    for (long i = 0; i <= n; ++i) ts.push_back(static_cast<double>(i) * t_step);
    return ts;
}

}  // namespace otoclab

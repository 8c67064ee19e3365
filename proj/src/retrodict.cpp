#include "otoclab/retrodict.hpp"

#include <cmath>
#include <functional>

namespace otoclab {

namespace {

constexpr double kPrune = 1e-14;

// Holds a charge against a meter for its lifetime.
class Charge {
public:
    Charge(MemoryMeter* meter, long entries) : meter_(meter), entries_(entries) {
        if (meter_) meter_->add(entries_);
    }
    ~Charge() {
        if (meter_) meter_->release(entries_);
    }
    Charge(const Charge&) = delete;
    Charge& operator=(const Charge&) = delete;

private:
    MemoryMeter* meter_;
    long entries_;
};

void check_context(const ObservableChain& chain, const RetrodictionContext& ctx) {
    if (ctx.rho_prime.rows() != chain.dim() || ctx.f_prime.size() != chain.dim())
        throw ConfigError("context dimension does not match the observable chain");
    if (!(ctx.probability > kMinConditioning))
        throw NumericError("conditioning probability vanishes; the weak value is undefined");
}

// Overlap matrices O_j(b, a) = <b|a> between consecutive eigenbases.
std::vector<Mat> chain_overlaps(const ObservableChain& chain) {
    std::vector<Mat> ov;
    for (int j = 0; j + 1 < chain.length(); ++j) ov.push_back(chain.eigen(j + 1).vectors.adjoint() * chain.eigen(j).vectors);
    return ov;
}

// Depth-first walk over eigenvector tuples. `m` is <k|j>...<b|a>.
using TupleVisit = std::function<void(const std::vector<int>&, cplx m)>;

void walk(const ObservableChain& chain, const std::vector<Mat>& ov, bool skip_zero_eigenvalues, const TupleVisit& visit,
          std::vector<int>& idx, int level, cplx m) {
    const int k = chain.length();
    if (level == k) {
        visit(idx, m);
        return;
    }
    const RVec& vals = chain.eigen(level).values;
    for (long j = 0; j < chain.dim(); ++j) {
        if (skip_zero_eigenvalues && std::abs(vals(j)) == 0.0) continue;
        cplx mm = level == 0 ? cplx(1.0) : ov[level - 1](j, idx[level - 1]) * m;
        if (std::abs(mm) < kPrune) continue;
        idx[level] = static_cast<int>(j);
        walk(chain, ov, skip_zero_eigenvalues, visit, idx, level + 1, mm);
    }
}

struct Boundary {
    Vec f_last;    // <f'|k>
    Vec rho_first; // <a|rho'|f'>
    Vec f_first;   // <f'|a>
    Vec rho_last;  // <k|rho'|f'>
};

Boundary boundary(const ObservableChain& chain, const RetrodictionContext& ctx) {
    const Mat& e0 = chain.eigen(0).vectors;
    const Mat& ek = chain.eigen(chain.length() - 1).vectors;
    Vec rf = ctx.rho_prime * ctx.f_prime;
    return {(ek.adjoint() * ctx.f_prime).conjugate(), e0.adjoint() * rf, (e0.adjoint() * ctx.f_prime).conjugate(),
            ek.adjoint() * rf};
}

}  // namespace

ObservableChain::ObservableChain(std::vector<Mat> observables) : ops_(std::move(observables)) {
    if (ops_.empty()) throw ConfigError("observable chain is empty");
    dim_ = ops_[0].rows();
    for (const auto& o : ops_) {
        if (o.rows() != dim_ || o.cols() != dim_) throw ConfigError("chain observables must share one dimension");
        if (!is_hermitian(o, 1e-10)) throw ConfigError("chain observables must be Hermitian");
        eig_.push_back(eigh(o));
    }
}

Mat ObservableChain::forward_product() const {
    Mat p = ops_[0];
    for (std::size_t j = 1; j < ops_.size(); ++j) p = ops_[j] * p;
    return p;
}

Mat ObservableChain::backward_product() const {
    Mat p = ops_[0];
    for (std::size_t j = 1; j < ops_.size(); ++j) p = p * ops_[j];
    return p;
}

RetrodictionContext make_context(const Mat& rho_prime, const Vec& f_prime) {
    if (rho_prime.rows() != rho_prime.cols() || f_prime.size() != rho_prime.rows())
        throw ConfigError("state and outcome vector dimensions differ");
    if (std::abs(f_prime.norm() - 1.0) > 1e-10) throw ConfigError("outcome vector must be normalized");
    RetrodictionContext ctx{rho_prime, f_prime, f_prime.dot(rho_prime * f_prime).real()};
    if (!(ctx.probability > kMinConditioning))
        throw NumericError("conditioning probability vanishes; the weak value is undefined");
    return ctx;
}

RetrodictionContext make_context(const Mat& rho, const Evolver& ev, double t1, double t2, const Vec& f) {
    if (t1 < 0 || t2 < t1) throw ConfigError("retrodiction times must satisfy 0 <= t' <= t''");
    Mat u1 = ev.propagator(t1);
    return make_context(u1 * rho * u1.adjoint(), ev.propagator(t2 - t1).adjoint() * f);
}

double weak_value(const Mat& a, const RetrodictionContext& ctx) {
    if (a.rows() != ctx.rho_prime.rows()) throw ConfigError("observable dimension does not match the context");
    if (!(ctx.probability > kMinConditioning))
        throw NumericError("conditioning probability vanishes; the weak value is undefined");
    return ctx.f_prime.dot(a * ctx.rho_prime * ctx.f_prime).real() / ctx.probability;
}

long gamma_nonzero_count(const ObservableChain& chain, double tol) {
    Mat g = chain.forward_product() + chain.backward_product();
    return static_cast<long>((g.array().abs() > tol).count());
}

double gamma_weak_direct(const ObservableChain& chain, const RetrodictionContext& ctx, MemoryMeter* meter) {
    check_context(chain, ctx);
    Mat g = chain.forward_product() + chain.backward_product();
    Charge c(meter, static_cast<long>((g.array().abs() > 1e-12).count()));
    return weak_value(g, ctx);
}

double gamma_weak_factored(const ObservableChain& chain, const RetrodictionContext& ctx, MemoryMeter* meter) {
    check_context(chain, ctx);
    const long k = chain.length(), d = chain.dim();
    Charge bases(meter, k * d * d + k * d);        // eigenvectors and eigenvalues
    Charge overlaps(meter, (k - 1) * d * d);        // <j+1|j> tables
    std::vector<Mat> ov = chain_overlaps(chain);
    Charge edges(meter, 5 * d);                     // rho'|f'> and four boundary vectors
    Boundary b = boundary(chain, ctx);
    Charge stack(meter, 3 * k + 2);                 // counters, running products, two sums
    std::vector<int> idx(k, 0);
    cplx fwd = 0.0, bwd = 0.0;
    walk(chain, ov, true, [&](const std::vector<int>& i, cplx m) {
        double lam = 1.0;
        for (long j = 0; j < k; ++j) lam *= chain.eigen(j).values(i[j]);
        fwd += lam * b.f_last(i[k - 1]) * m * b.rho_first(i[0]);
        bwd += lam * b.f_first(i[0]) * std::conj(m) * b.rho_last(i[k - 1]);
    }, idx, 0, 1.0);
    return (fwd.real() + bwd.real()) / ctx.probability;
}

ConditionalQuasiprobs conditional_quasiprobs(const ObservableChain& chain, const RetrodictionContext& ctx) {
    check_context(chain, ctx);
    const long k = chain.length();
    std::vector<Mat> ov = chain_overlaps(chain);
    Boundary b = boundary(chain, ctx);
    ConditionalQuasiprobs out;
    out.probability = ctx.probability;
    std::vector<int> idx(k, 0);
    walk(chain, ov, false, [&](const std::vector<int>& i, cplx m) {
        ConditionalEntry e;
        e.index = i;
        for (long j = 0; j < k; ++j) e.eigenvalues.push_back(chain.eigen(j).values(i[j]));
        e.forward_kd = b.f_last(i[k - 1]) * m * b.rho_first(i[0]);
        e.backward_kd = b.f_first(i[0]) * std::conj(m) * b.rho_last(i[k - 1]);
        e.forward = e.forward_kd.real() / ctx.probability;
        e.backward = e.backward_kd.real() / ctx.probability;
        out.entries.push_back(std::move(e));
    }, idx, 0, 1.0);
    return out;
}

double tilde_gamma_weak(const ObservableChain& chain, const RetrodictionContext& ctx) {
    ConditionalQuasiprobs cq = conditional_quasiprobs(chain, ctx);
    double acc = 0.0;
    for (const auto& e : cq.entries) {
        double lam = 1.0;
        for (double x : e.eigenvalues) lam *= x;
        // Re(i z) = -Im z
        acc += lam * (-e.forward_kd.imag() + e.backward_kd.imag());
    }
    return acc / cq.probability;
}

double tilde_gamma_direct(const ObservableChain& chain, const RetrodictionContext& ctx) {
    check_context(chain, ctx);
    Mat gt = I * (chain.forward_product() - chain.backward_product());
    return weak_value(gt, ctx);
}

OtocRetrodiction otoc_retrodiction(const Mat& rho, const Mat& w, const Mat& v, const Evolver& ev, double t,
                                   long w3_index) {
    const long d = ev.dim();
    if (rho.rows() != d || w.rows() != d || v.rows() != d) throw ConfigError("operator dimensions do not match");
    if (d > kMaxFineDim) throw ConfigError("retrodiction weights are limited to 6 qubits");
    if (w3_index < 0 || w3_index >= d) throw ConfigError("outcome index out of range");
    Eigensystem we = eigh(w), ve = eigh(v);
    Mat u = ev.propagator(t);
    Mat m = we.vectors.adjoint() * u * ve.vectors;  // <w|U|v>
    Vec r = ve.vectors.adjoint() * rho * u.adjoint() * we.vectors.col(w3_index);  // <v1|rho U^dagger|w3>
    OtocRetrodiction out;
    out.v_values = ve.values;
    out.w_values = we.values;
    out.probability = (m.row(w3_index) * (ve.vectors.adjoint() * rho * ve.vectors) * m.row(w3_index).adjoint())(0, 0).real();
    if (!(out.probability > kMinConditioning))
        throw NumericError("conditioning probability vanishes; the weak value is undefined");
    out.numerators.resize(static_cast<std::size_t>(d * d * d));
    double acc = 0.0;
    std::size_t f = 0;
    for (long v1 = 0; v1 < d; ++v1)
        for (long w2 = 0; w2 < d; ++w2)
            for (long v2 = 0; v2 < d; ++v2) {
                cplx a = m(w3_index, v2) * std::conj(m(w2, v2)) * m(w2, v1) * r(v1);
                out.numerators[f++] = a;
                acc += ve.values(v1) * we.values(w2) * ve.values(v2) * a.real();
            }
    out.value = acc / out.probability;
    return out;
}

double weighted_trace_distance(const Mat& gamma, const Mat& gamma_est, const Mat& rho_prime) {
    if (gamma.rows() != gamma_est.rows() || gamma.rows() != rho_prime.rows())
        throw ConfigError("operator dimensions do not match");
    Mat diff = gamma - gamma_est;
    return (rho_prime * diff * diff).trace().real();
}

Mat estimator_operator(const std::vector<double>& gammas, const Mat& f_primes) {
    if (static_cast<long>(gammas.size()) != f_primes.cols()) throw ConfigError("one estimate per outcome is required");
    Mat g = Mat::Zero(f_primes.rows(), f_primes.rows());
    for (long f = 0; f < f_primes.cols(); ++f) g += gammas[f] * f_primes.col(f) * f_primes.col(f).adjoint();
    return g;
}

std::vector<double> optimal_estimates(const Mat& gamma, const Mat& rho_prime, const Mat& f_primes) {
    std::vector<double> out;
    for (long f = 0; f < f_primes.cols(); ++f) {
        Vec fp = f_primes.col(f);
        double p = fp.dot(rho_prime * fp).real();
        out.push_back(p > kMinConditioning ? fp.dot(gamma * rho_prime * fp).real() / p : 0.0);
    }
    return out;
}

double distance_completed_square(const Mat& gamma, const Mat& rho_prime, const Mat& f_primes,
                                 const std::vector<double>& gammas) {
    double acc = (rho_prime * gamma * gamma).trace().real();
    for (long f = 0; f < f_primes.cols(); ++f) {
        Vec fp = f_primes.col(f);
        double p = fp.dot(rho_prime * fp).real();
        double re = fp.dot(gamma * rho_prime * fp).real();
        if (p > kMinConditioning) {
            acc -= re * re / p;
            double dev = gammas[f] - re / p;
            acc += p * dev * dev;
        } else {
            acc += gammas[f] * gammas[f] * p - 2 * gammas[f] * re;
        }
    }
    return acc;
}

}  // namespace otoclab

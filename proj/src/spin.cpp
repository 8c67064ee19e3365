#include "otoclab/spin.hpp"

#include <cmath>

namespace otoclab {

PauliAxis parse_axis(const std::string& s) {
    if (s == "x" || s == "X") return PauliAxis::x;
    if (s == "y" || s == "Y") return PauliAxis::y;
    if (s == "z" || s == "Z") return PauliAxis::z;
    throw ConfigError("unknown Pauli axis '" + s + "'");
}

char axis_char(PauliAxis a) {
    switch (a) {
        case PauliAxis::x: return 'x';
        case PauliAxis::y: return 'y';
        default: return 'z';
    }
}

Mat pauli(PauliAxis a) {
    Mat p = Mat::Zero(2, 2);
    switch (a) {
        case PauliAxis::x: p(0, 1) = 1; p(1, 0) = 1; break;
        case PauliAxis::y: p(0, 1) = -I; p(1, 0) = I; break;
        case PauliAxis::z: p(0, 0) = 1; p(1, 1) = -1; break;
    }
    return p;
}

namespace {

long checked_dim(int n) {
    if (n < 1) throw ConfigError("number of sites must be >= 1");
    if (n > 12 || (1L << n) > kMaxDim) throw ConfigError("number of sites exceeds the dense maximum");
    return 1L << n;
}

inline int bit_of(long index, int n, int site) {
    return static_cast<int>((index >> (n - site)) & 1L);
}

}  // namespace

Mat site_pauli(int n, int site, PauliAxis a) {
    long d = checked_dim(n);
    if (site < 1 || site > n) throw ConfigError("site " + std::to_string(site) + " out of range [1," + std::to_string(n) + "]");
    Mat out = Mat::Zero(d, d);
    long flip = 1L << (n - site);
    for (long col = 0; col < d; ++col) {
        int b = bit_of(col, n, site);
        switch (a) {
            case PauliAxis::z: out(col, col) = b ? -1.0 : 1.0; break;
            case PauliAxis::x: out(col ^ flip, col) = 1.0; break;
            case PauliAxis::y: out(col ^ flip, col) = b ? -I : I; break;
        }
    }
    return out;
}

Mat ising_hamiltonian(const SpinChainSpec& spec) {
    if (spec.n < 2) throw ConfigError("Ising chain needs at least 2 sites");
    if (!(spec.j > 0)) throw ConfigError("coupling J must be positive");
    const int n = spec.n;
    long d = checked_dim(n);
    Mat hmat = Mat::Zero(d, d);
    for (long s = 0; s < d; ++s) {
        double diag = 0.0;
        for (int i = 1; i < n; ++i) {
            double zi = bit_of(s, n, i) ? -1.0 : 1.0;
            double zj = bit_of(s, n, i + 1) ? -1.0 : 1.0;
            diag -= spec.j * zi * zj;
        }
        for (int i = 1; i <= n; ++i) diag -= spec.h * (bit_of(s, n, i) ? -1.0 : 1.0);
        hmat(s, s) = diag;
        for (int i = 1; i <= n; ++i) hmat(s ^ (1L << (n - i)), s) -= spec.g;
    }
    return hmat;
}

Mat thermal_state(const Eigensystem& es, double temperature) {
    const long d = es.values.size();
    if (!(temperature > 0)) throw ConfigError("temperature must be positive");
    if (std::isinf(temperature)) return Mat::Identity(d, d) / static_cast<double>(d);
    double e0 = es.values.minCoeff();
    RVec w(d);
    for (long i = 0; i < d; ++i) w(i) = std::exp(-(es.values(i) - e0) / temperature);
    w /= w.sum();
    Mat rho = es.vectors * w.cast<cplx>().asDiagonal() * es.vectors.adjoint();
    return 0.5 * (rho + rho.adjoint());
}

Mat thermal_state(const Mat& h, double temperature) {
    if (!(temperature > 0)) throw ConfigError("temperature must be positive");
    if (std::isinf(temperature)) {
        if (h.rows() != h.cols()) throw ConfigError("thermal_state: matrix must be square");
        return Mat::Identity(h.rows(), h.cols()) / static_cast<double>(h.rows());
    }
    return thermal_state(eigh(h), temperature);
}

Mat product_plus_x_state(int n) {
    long d = checked_dim(n);
    Vec psi = Vec::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    return psi * psi.adjoint();
}

Spectral spectral_decomposition(const Mat& o) {
    if (!is_hermitian(o)) throw ConfigError("observable is not Hermitian");
    const long d = o.rows();
    Mat id = Mat::Identity(d, d);
    Spectral s;
    if (max_abs(o * o - id) <= 1e-12) {
        for (double a : {-1.0, 1.0}) {
            Mat p = 0.5 * (id + a * o);
            if (std::abs(p.trace().real()) > 0.5) {
                s.values.push_back(a);
                s.projectors.push_back(p);
            }
        }
        return s;
    }
    Eigensystem es = eigh(o);
    long start = 0;
    while (start < d) {
        long stop = start + 1;
        while (stop < d && es.values(stop) == es.values(start)) ++stop;
        auto block = es.vectors.middleCols(start, stop - start);
        s.values.push_back(es.values(start));
        s.projectors.push_back(block * block.adjoint());
        start = stop;
    }
    return s;
}

Mat eigenprojector(const Mat& o, double eigenvalue) {
    Spectral s = spectral_decomposition(o);
    for (std::size_t k = 0; k < s.values.size(); ++k)
        if (std::abs(s.values[k] - eigenvalue) <= 1e-9) return s.projectors[k];
    throw ConfigError("eigenprojector: value is not in the spectrum");
}

}  // namespace otoclab

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "otoclab/qla.hpp"

namespace otoclab {

enum class PauliAxis { x, y, z };

PauliAxis parse_axis(const std::string& s);
char axis_char(PauliAxis a);

struct SpinChainSpec {
    int n = 2;
    double j = 1.0;
    double h = 0.0;  // longitudinal field
    double g = 0.0;  // transverse field
};

// Single-site Pauli on a chain of n qubits. Site 1 is the most significant
// (slowest) tensor factor.
struct LocalObservable {
    int site = 1;
    PauliAxis axis = PauliAxis::z;
};

Mat pauli(PauliAxis a);
Mat site_pauli(int n, int site, PauliAxis a);
inline Mat site_pauli(int n, const LocalObservable& o) { return site_pauli(n, o.site, o.axis); }

// H = -J sum s^z_i s^z_{i+1} - h sum s^z_i - g sum s^x_i, open boundaries.
Mat ising_hamiltonian(const SpinChainSpec& spec);

inline constexpr double kInfiniteTemperature = std::numeric_limits<double>::infinity();

Mat thermal_state(const Mat& h, double temperature);
Mat thermal_state(const Eigensystem& es, double temperature);
Mat product_plus_x_state(int n);

// Spectral decomposition into distinct eigenvalues and their projectors.
struct Spectral {
    std::vector<double> values;      // ascending, distinct
    std::vector<Mat> projectors;
};

// Involutory operators (O^2 = 1) use (1 +/- O)/2 directly, everything else
// goes through eigh.
Spectral spectral_decomposition(const Mat& o);
Mat eigenprojector(const Mat& o, double eigenvalue);

}  // namespace otoclab

#pragma once

#include "unmix/gabor.hpp"
#include "unmix/tonemodel.hpp"

#include <complex>
#include <vector>

namespace unmix {

// Gaussian peak basis G[l,h] = exp(-(beta l - f_h)^2 / (2 sigma^2)) with
// f_h = f1 h sqrt(1 + b h^2).  Columns are stored sparsely over the +-8 sigma
// evaluation window of each harmonic; harmonics at or above the bin range
// have empty columns.
struct PeakBasis {
    struct Column {
        int lo = 0;                  // first bin of the window
        std::vector<double> values;  // g_h[lo .. lo+values.size()-1]
    };
    std::vector<Column> cols;
    std::vector<double> freqs;  // f_h in Hz
    int n_spc = 0;
    double f1_hz = 0.0;
    double b = 0.0;
    double sigma_hz = 0.0;
    double beta_hz = 0.0;

    int n_har() const { return static_cast<int>(cols.size()); }
};

PeakBasis make_peak_basis(double f1_hz, double b, double sigma_hz, int n_har,
                          const GaborConfig& config);

// Relative default regularization: 1e-6 * (max column norm of G)^2, floored
// away from zero for degenerate bases.
double default_reg(const PeakBasis& basis);

// c = argmin 1/2 ||G c - v||^2 + reg/2 ||c||^2 via the normal equations
// (G is real, so real and imaginary parts decouple).
ComplexVec solve_coeffs(const PeakBasis& basis, const ComplexVec& v, double reg);

// Phase angles arg(c_h) in [-pi, pi); zero coefficients map to phase 0.
std::vector<double> extract_phases(const ComplexVec& c);

struct CoeffGrad {
    ComplexVec grad_v;      // dL/dv
    double grad_f1 = 0.0;   // dL/df1 through G
    double grad_b = 0.0;    // dL/db through G
    double grad_sigma = 0.0;
    double grad_reg = 0.0;  // dL/dreg (for callers deriving reg from G)
};

// Gradient of default_reg with respect to (f1, b, sigma); zero when the
// floor is active.
struct RegGrad {
    double df1 = 0.0;
    double db = 0.0;
    double dsigma = 0.0;
};
RegGrad default_reg_grad(const PeakBasis& basis);

// Exact gradients of the regularized solution, given upstream = dL/dc.
CoeffGrad solve_coeffs_grad(const PeakBasis& basis, const ComplexVec& v,
                            double reg, const ComplexVec& upstream);

}  // namespace unmix

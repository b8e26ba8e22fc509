#include "unmix/phasesolver.hpp"

#include "unmix/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

void cholesky_factor(std::vector<double>& a, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = a[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k)
                sum -= a[static_cast<size_t>(i) * n + k] * a[static_cast<size_t>(j) * n + k];
            if (i == j) {
                if (!(sum > 0.0))
                    throw std::domain_error("cholesky_factor: matrix not positive definite");
                a[static_cast<size_t>(i) * n + j] = std::sqrt(sum);
            } else {
                a[static_cast<size_t>(i) * n + j] = sum / a[static_cast<size_t>(j) * n + j];
            }
        }
    }
}

void cholesky_solve(const std::vector<double>& l, int n, std::vector<double>& b) {
    for (int i = 0; i < n; ++i) {
        double sum = b[i];
        for (int k = 0; k < i; ++k) sum -= l[static_cast<size_t>(i) * n + k] * b[k];
        b[i] = sum / l[static_cast<size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double sum = b[i];
        for (int k = i + 1; k < n; ++k) sum -= l[static_cast<size_t>(k) * n + i] * b[k];
        b[i] = sum / l[static_cast<size_t>(i) * n + i];
    }
}

PeakBasis make_peak_basis(double f1_hz, double b, double sigma_hz, int n_har,
                          const GaborConfig& config) {
    if (!(f1_hz > 0.0)) throw std::domain_error("make_peak_basis: fundamental must be positive");
    if (b < 0.0) throw std::domain_error("make_peak_basis: inharmonicity must be non-negative");
    if (!(sigma_hz > 0.0)) throw std::domain_error("make_peak_basis: sigma must be positive");

    PeakBasis basis;
    basis.n_spc = config.n_spc;
    basis.f1_hz = f1_hz;
    basis.b = b;
    basis.sigma_hz = sigma_hz;
    basis.beta_hz = config.beta_hz;
    basis.cols.resize(n_har);
    basis.freqs.resize(n_har);

    double inv2s2 = 1.0 / (2.0 * sigma_hz * sigma_hz);
    double radius = 8.0 * sigma_hz / config.beta_hz;
    for (int h = 1; h <= n_har; ++h) {
        double hh = static_cast<double>(h);
        double f = f1_hz * hh * std::sqrt(1.0 + b * hh * hh);
        basis.freqs[h - 1] = f;
        PeakBasis::Column& col = basis.cols[h - 1];
        if (f >= config.n_spc * config.beta_hz) continue;
        double center = f / config.beta_hz;
        int lo = std::max(0, static_cast<int>(std::ceil(center - radius)));
        int hi = std::min(config.n_spc - 1, static_cast<int>(std::floor(center + radius)));
        if (hi < lo) continue;
        col.lo = lo;
        col.values.resize(hi - lo + 1);
        for (int l = lo; l <= hi; ++l) {
            double d = config.beta_hz * l - f;
            col.values[l - lo] = std::exp(-d * d * inv2s2);
        }
    }
    return basis;
}

double default_reg(const PeakBasis& basis) {
    double max_sq = 0.0;
    for (const auto& col : basis.cols) {
        double sq = 0.0;
        for (double v : col.values) sq += v * v;
        max_sq = std::max(max_sq, sq);
    }
    return 1e-6 * std::max(max_sq, 1e-12);
}

RegGrad default_reg_grad(const PeakBasis& basis) {
    double max_sq = 0.0;
    int best = -1;
    for (int h = 0; h < basis.n_har(); ++h) {
        double sq = 0.0;
        for (double v : basis.cols[h].values) sq += v * v;
        if (sq > max_sq) {
            max_sq = sq;
            best = h;
        }
    }
    RegGrad grad;
    if (best < 0 || max_sq <= 1e-12) return grad;  // floor active
    const auto& col = basis.cols[best];
    double inv_s2 = 1.0 / (basis.sigma_hz * basis.sigma_hz);
    double d_fh = 0.0, d_sigma = 0.0;
    for (size_t i = 0; i < col.values.size(); ++i) {
        double d = basis.beta_hz * (col.lo + static_cast<int>(i)) - basis.freqs[best];
        double g2 = col.values[i] * col.values[i];
        d_fh += 2.0 * g2 * d * inv_s2;
        d_sigma += 2.0 * g2 * d * d * inv_s2 / basis.sigma_hz;
    }
    double hh = static_cast<double>(best + 1);
    double root = std::sqrt(1.0 + basis.b * hh * hh);
    grad.df1 = 1e-6 * d_fh * hh * root;
    grad.db = 1e-6 * d_fh * basis.f1_hz * hh * hh * hh / (2.0 * root);
    grad.dsigma = 1e-6 * d_sigma;
    return grad;
}

namespace {

// Normal-equation matrix G^T G + reg I.
std::vector<double> normal_matrix(const PeakBasis& basis, double reg) {
    int n = basis.n_har();
    std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const auto& ci = basis.cols[i];
            const auto& cj = basis.cols[j];
            int lo = std::max(ci.lo, cj.lo);
            int hi = std::min(ci.lo + static_cast<int>(ci.values.size()),
                              cj.lo + static_cast<int>(cj.values.size())) - 1;
            double sum = 0.0;
            for (int l = lo; l <= hi; ++l)
                sum += ci.values[l - ci.lo] * cj.values[l - cj.lo];
            if (i == j) sum += reg;
            a[static_cast<size_t>(i) * n + j] = sum;
            a[static_cast<size_t>(j) * n + i] = sum;
        }
    }
    return a;
}

// y += G x (columns applied sparsely), complex x.
void apply_basis(const PeakBasis& basis, const ComplexVec& x, ComplexVec& y) {
    for (int h = 0; h < basis.n_har(); ++h) {
        const auto& col = basis.cols[h];
        for (size_t i = 0; i < col.values.size(); ++i)
            y[col.lo + i] += col.values[i] * x[h];
    }
}

}  // namespace

ComplexVec solve_coeffs(const PeakBasis& basis, const ComplexVec& v, double reg) {
    if (!(reg > 0.0)) throw std::invalid_argument("solve_coeffs: reg must be positive");
    if (static_cast<int>(v.size()) != basis.n_spc)
        throw std::invalid_argument("solve_coeffs: rhs length mismatch");
    int n = basis.n_har();
    std::vector<double> a = normal_matrix(basis, reg);
    cholesky_factor(a, n);
    std::vector<double> re(n, 0.0), im(n, 0.0);
    for (int h = 0; h < n; ++h) {
        const auto& col = basis.cols[h];
        for (size_t i = 0; i < col.values.size(); ++i) {
            re[h] += col.values[i] * v[col.lo + i].real();
            im[h] += col.values[i] * v[col.lo + i].imag();
        }
    }
    cholesky_solve(a, n, re);
    cholesky_solve(a, n, im);
    ComplexVec c(n);
    for (int h = 0; h < n; ++h) c[h] = {re[h], im[h]};
    return c;
}

std::vector<double> extract_phases(const ComplexVec& c) {
    std::vector<double> phases(c.size());
    for (size_t h = 0; h < c.size(); ++h) {
        if (c[h] == std::complex<double>(0.0, 0.0)) {
            phases[h] = 0.0;
            continue;
        }
        double phi = std::atan2(c[h].imag(), c[h].real());
        if (phi >= M_PI) phi = -M_PI;
        phases[h] = phi;
    }
    return phases;
}

CoeffGrad solve_coeffs_grad(const PeakBasis& basis, const ComplexVec& v,
                            double reg, const ComplexVec& upstream) {
    int n = basis.n_har();
    if (static_cast<int>(upstream.size()) != n)
        throw std::invalid_argument("solve_coeffs_grad: upstream length mismatch");

    ComplexVec c = solve_coeffs(basis, v, reg);

    std::vector<double> a = normal_matrix(basis, reg);
    cholesky_factor(a, n);
    std::vector<double> s_re(n), s_im(n);
    for (int h = 0; h < n; ++h) {
        s_re[h] = upstream[h].real();
        s_im[h] = upstream[h].imag();
    }
    cholesky_solve(a, n, s_re);
    cholesky_solve(a, n, s_im);
    ComplexVec s(n);
    for (int h = 0; h < n; ++h) s[h] = {s_re[h], s_im[h]};

    CoeffGrad grad;
    grad.grad_v.assign(basis.n_spc, {0.0, 0.0});
    apply_basis(basis, s, grad.grad_v);  // dL/dv = G s

    // dc = -A^{-1} c dreg, so dL/dreg = -sum_x s_x^T c_x.
    for (int h = 0; h < n; ++h)
        grad.grad_reg -= s[h].real() * c[h].real() + s[h].imag() * c[h].imag();

    // dL/dG = sum over re/im parts of (v - G c) s^T - (G s) c^T, contracted
    // against dG/dparam inside the column windows only.
    ComplexVec gc(basis.n_spc, {0.0, 0.0});
    apply_basis(basis, c, gc);
    const ComplexVec& gs = grad.grad_v;

    double inv_s2 = 1.0 / (basis.sigma_hz * basis.sigma_hz);
    for (int h = 0; h < n; ++h) {
        const auto& col = basis.cols[h];
        double grad_fh = 0.0;
        for (size_t i = 0; i < col.values.size(); ++i) {
            int l = col.lo + static_cast<int>(i);
            std::complex<double> r = v[l] - gc[l];
            double dldg = r.real() * s[h].real() + r.imag() * s[h].imag() -
                          gs[l].real() * c[h].real() - gs[l].imag() * c[h].imag();
            double d = basis.beta_hz * l - basis.freqs[h];
            double g = col.values[i];
            grad.grad_sigma += dldg * g * d * d * inv_s2 / basis.sigma_hz;
            grad_fh += dldg * g * d * inv_s2;
        }
        double hh = static_cast<double>(h + 1);
        double root = std::sqrt(1.0 + basis.b * hh * hh);
        grad.grad_f1 += grad_fh * hh * root;
        grad.grad_b += grad_fh * basis.f1_hz * hh * hh * hh / (2.0 * root);
    }
    return grad;
}

}  // namespace unmix

#pragma once

#include "unmix/gabor.hpp"
#include "unmix/net/tensor.hpp"

#include <vector>

namespace unmix::net::ops {

// Elementwise (shapes must match).
int add(Tape& t, int a, int b);
int sub(Tape& t, int a, int b);
int mul(Tape& t, int a, int b);
int divide(Tape& t, int a, int b);
int add_const(Tape& t, int a, double c);
int mul_const(Tape& t, int a, double c);
int pow_const(Tape& t, int a, double p);  // requires positive inputs
int relu(Tape& t, int a);
int tanh_(Tape& t, int a);
int sigmoid(Tape& t, int a);
int softplus(Tape& t, int a);
int exp_(Tape& t, int a);
int log_(Tape& t, int a);
int abs_(Tape& t, int a);  // subgradient 0 at 0
int sin_(Tape& t, int a);
int cos_(Tape& t, int a);
// Value is clamped to [0, inf) but the gradient passes through unchanged
// (projection-at-read for the dictionary).
int clamp_nonneg_passthrough(Tape& t, int a);

// Reductions / broadcasts.
int sum(Tape& t, int a);       // -> [1]
int smul(Tape& t, int s, int a);  // scalar * tensor
int sadd(Tape& t, int s, int a);  // scalar + tensor

// Structure.
int concat_rows(Tape& t, const std::vector<int>& parts);  // [Ci,L] -> [sum Ci, L]
int slice_row(Tape& t, int a, int row);                   // [C,L] -> [L]
int slice(Tape& t, int a, int lo, int len);               // flat slice -> [len]
int stack2(Tape& t, int a, int b);                        // [L],[L] -> [2,L]
int pick(Tape& t, int a, int idx);                        // -> [1]
int gather(Tape& t, int a, std::vector<int> idx);         // -> [idx.size()]

// Complex helpers on [2, L] tensors (row 0 real, row 1 imaginary).
int cmag(Tape& t, int a);        // -> [L]
int phase_angles(Tape& t, int a);  // [2,n] -> [n], arg in [-pi, pi)

// Convolutions.  x: [Cin, L]; conv1d weights [Cout, Cin, K] (odd K, symmetric
// zero padding, L divisible by stride); transpose weights [Cin, Cout, K] with
// output length L * stride.
int conv1d(Tape& t, int x, int w, int bias, int stride);
int conv1d_transpose(Tape& t, int x, int w, int bias, int stride);

// Log-density of index k under the lifted softmax distribution
// p_j^r / sum p^r restricted to unmasked entries (mask[j] != 0 = allowed).
int log_softmax_pick(Tape& t, int logits, const std::vector<char>& mask, int k,
                     double r);
// Log-density of draw u under the lifted Bernoulli with success logit z.
int bernoulli_lift_logdensity(Tape& t, int z, int u, double r);
// Log-density of the (unlifted) Gamma(alpha, beta) at fixed draw b.
int gamma_logdensity(Tape& t, int alpha, int beta, double b);

// Harmonic Gaussian-peak superposition: given complex amplitudes [2, n_har],
// produces [2, n_spc] with peaks at f_h = beta (nu + nu_tilde) h sqrt(1+b h^2).
// nu_tilde and sigma are scalar nodes; nu and b are fixed sampled values.
int peak_superposition(Tape& t, int amps, int nu_tilde, int sigma, int nu,
                       double b, const GaborConfig& cfg);
// Regularized least-squares fit of n_har complex peak coefficients to the
// artificial spectrum v ([2, n_spc]); differentiates through the solution
// with respect to v, nu_tilde and sigma.
int lsq_solve(Tape& t, int v, int nu_tilde, int sigma, int nu, double b,
              int n_har, const GaborConfig& cfg);

}  // namespace unmix::net::ops

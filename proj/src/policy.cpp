#include "unmix/policy.hpp"

#include "unmix/net/ops.hpp"
#include "unmix/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

namespace ops = net::ops;
using net::Tape;
using net::Tensor;

std::vector<std::vector<double>> lift_combinations(const PolicyConfig& cfg, int m) {
    size_t s = 1;
    for (int j = 0; j < m; ++j) s *= cfg.r_values.size();
    std::vector<std::vector<double>> combos(s, std::vector<double>(m));
    for (size_t i = 0; i < s; ++i) {
        size_t rem = i;
        for (int j = 0; j < m; ++j) {
            combos[i][j] = cfg.r_values[rem % cfg.r_values.size()];
            rem /= cfg.r_values.size();
        }
    }
    return combos;
}

namespace {

int complex_constant(Tape& t, const ComplexVec& v) {
    int n = static_cast<int>(v.size());
    Tensor x{2, n};
    for (int l = 0; l < n; ++l) {
        x[l] = v[l].real();
        x[n + l] = v[l].imag();
    }
    return t.constant(std::move(x));
}

// Lifted radial map (|y|+delta)^q y / (|y|+eps) applied to a [2, L] node.
int rad_lift(Tape& t, int y, const LossConfig& cfg) {
    int m = ops::cmag(t, y);
    int s = ops::divide(t, ops::pow_const(t, ops::add_const(t, m, cfg.delta), cfg.q),
                        ops::add_const(t, m, cfg.eps_rad));
    return ops::stack2(t, ops::mul(t, s, ops::slice_row(t, y, 0)),
                       ops::mul(t, s, ops::slice_row(t, y, 1)));
}

int half_sq_norm(Tape& t, int a, int b) {
    int d = ops::sub(t, a, b);
    return ops::mul_const(t, ops::sum(t, ops::mul(t, d, d)), 0.5);
}

int dist_abs_node(Tape& t, int Y, int y, const LossConfig& cfg) {
    auto lift = [&](int z) {
        return ops::pow_const(t, ops::add_const(t, ops::cmag(t, z), cfg.delta), cfg.q);
    };
    return half_sq_norm(t, lift(Y), lift(y));
}

int dist_rad_node(Tape& t, int Y, int y, const LossConfig& cfg) {
    return half_sq_norm(t, rad_lift(t, Y, cfg), rad_lift(t, y, cfg));
}

std::complex<double> node_c(const Tape& t, int id, int n, int l) {
    const Tensor& v = t.val(id);
    return {v[l], v[static_cast<size_t>(n) + l]};
}

}  // namespace

Rollout rollout(const net::UNet& net, const Dictionary& dict, const ComplexVec& Y,
                const GaborConfig& gcfg, const PolicyConfig& pcfg,
                const std::vector<double>& r, DecodeMode mode,
                std::uint64_t k0, std::uint64_t k1, std::uint64_t k2,
                const ForcedDraws* forced) {
    const net::UNetConfig& ncfg = net.config();
    int m = ncfg.n_ins;
    int n_spc = ncfg.n_spc;
    if (dict.n_ins != m || dict.n_har != pcfg.n_har)
        throw std::invalid_argument("rollout: dictionary shape mismatch");
    if (static_cast<int>(Y.size()) != n_spc)
        throw std::invalid_argument("rollout: spectrum length mismatch");
    if (mode == DecodeMode::Sample && static_cast<int>(r.size()) != m)
        throw std::invalid_argument("rollout: lift exponent count mismatch");

    Rollout out;
    out.tape = std::make_unique<Tape>();
    Tape& t = *out.tape;
    out.param_ids = net.register_on(t);
    Tensor dten{dict.n_har * dict.n_ins};
    for (size_t i = 0; i < dten.size(); ++i) dten[i] = dict.entries[i];
    out.dict_id = t.leaf(std::move(dten));
    int dict_clamped = ops::clamp_nonneg_passthrough(t, out.dict_id);

    int Yc = complex_constant(t, Y);
    int res_dict = Yc;
    int res_dir = Yc;
    int zero_slot = t.constant(Tensor{4, n_spc});
    net::HeadLayout heads = net.heads();

    int n_bins = ncfg.nu_max - ncfg.nu_min + 1;
    std::vector<char> ins_used(m, 0);
    std::vector<int> y_dict_nodes(m), y_dir_nodes(m);
    std::vector<int> logpi_terms, logpi_r_terms;
    out.frame.tones.resize(m);
    out.frame.y_tone.resize(m);
    out.frame.y_tone_dir.resize(m);

    for (int j = 0; j < m; ++j) {
        RandomStream rng(k0, k1, k2, static_cast<std::uint64_t>(j));

        // Network input: both residuals, their magnitudes, previous tones.
        std::vector<int> parts = {res_dict, res_dir, ops::cmag(t, res_dict),
                                  ops::cmag(t, res_dir)};
        for (int s = 0; s < m - 1; ++s) {
            if (s < j)
                parts.push_back(ops::concat_rows(t, {y_dict_nodes[s], y_dir_nodes[s]}));
            else
                parts.push_back(zero_slot);
        }
        int x = ops::concat_rows(t, parts);
        if (mode == DecodeMode::Sample && ncfg.noise_std > 0.0) {
            Tensor noise(t.val(x).shape);
            for (size_t i = 0; i < noise.size(); ++i)
                noise[i] = ncfg.noise_std * rng.normal();
            x = ops::add(t, x, t.constant(std::move(noise)));
        }
        int h = net.forward(t, out.param_ids, x);

        // Joint (nu, eta) categorical over the allowed grid.
        double rj = mode == DecodeMode::Sample ? r[j] : 1.0;
        std::vector<int> grid_idx(static_cast<size_t>(m) * n_bins);
        std::vector<char> grid_mask(grid_idx.size());
        for (int ins = 0; ins < m; ++ins)
            for (int bb = 0; bb < n_bins; ++bb) {
                size_t gi = static_cast<size_t>(ins) * n_bins + bb;
                grid_idx[gi] = heads.logits(ins) * n_spc + ncfg.nu_min + bb;
                grid_mask[gi] = ins_used[ins] ? 0 : 1;
            }
        int logits = ops::gather(t, h, grid_idx);
        const Tensor& lv = t.val(logits);
        int pick_gi;
        if (forced) {
            const ForcedDraws::Tone& fd = forced->tones.at(j);
            pick_gi = fd.instrument * n_bins + (fd.nu - ncfg.nu_min);
        } else if (mode == DecodeMode::Sample) {
            double mx = -1e300;
            for (size_t gi = 0; gi < grid_mask.size(); ++gi)
                if (grid_mask[gi]) mx = std::max(mx, lv[gi]);
            std::vector<double> w(grid_mask.size(), 0.0);
            for (size_t gi = 0; gi < grid_mask.size(); ++gi)
                if (grid_mask[gi]) w[gi] = std::exp(rj * (lv[gi] - mx));
            pick_gi = rng.categorical(w.data(), static_cast<int>(w.size()));
        } else {
            pick_gi = -1;
            double best = -1e300;
            for (size_t gi = 0; gi < grid_mask.size(); ++gi)
                if (grid_mask[gi] && lv[gi] > best) {
                    best = lv[gi];
                    pick_gi = static_cast<int>(gi);
                }
        }
        int ins = pick_gi / n_bins;
        int nu = ncfg.nu_min + pick_gi % n_bins;
        ins_used[ins] = 1;

        // Continuous heads at the chosen grid cell.
        auto pick_at = [&](int row) { return ops::pick(t, h, row * n_spc + nu); };
        int a_node = ops::abs_(t, pick_at(heads.a(ins)));
        int sigma_node = ops::add_const(
            t, ops::softplus(t, pick_at(heads.sigma(ins))), pcfg.sigma_min_hz);
        int nut_node = ops::mul_const(t, ops::tanh_(t, pick_at(heads.nu_tilde(ins))), 5.0);
        int alpha_node = ops::exp_(t, pick_at(heads.alpha_gamma(ins)));
        int beta_node = ops::exp_(t, pick_at(heads.beta_gamma(ins)));
        int u_logit = pick_at(heads.u(ins));

        double alpha_v = t.val(alpha_node)[0];
        double beta_v = t.val(beta_node)[0];
        double b;
        int u;
        if (forced) {
            b = forced->tones.at(j).b;
            u = forced->tones.at(j).u;
        } else if (mode == DecodeMode::Sample) {
            b = rng.gamma(alpha_v, beta_v);
            double z = t.val(u_logit)[0];
            u = rng.bernoulli(1.0 / (1.0 + std::exp(-rj * z))) ? 1 : 0;
        } else {
            b = alpha_v >= 1.0 ? (alpha_v - 1.0) / beta_v : 0.0;
            u = t.val(u_logit)[0] >= 0.0 ? 1 : 0;
        }

        if (mode == DecodeMode::Sample) {
            logpi_terms.push_back(ops::log_softmax_pick(t, logits, grid_mask, pick_gi, 1.0));
            logpi_terms.push_back(ops::gamma_logdensity(t, alpha_node, beta_node, b));
            logpi_terms.push_back(ops::bernoulli_lift_logdensity(t, u_logit, u, 1.0));
            logpi_r_terms.push_back(ops::log_softmax_pick(t, logits, grid_mask, pick_gi, rj));
            logpi_r_terms.push_back(ops::gamma_logdensity(t, alpha_node, beta_node, b));
            logpi_r_terms.push_back(ops::bernoulli_lift_logdensity(t, u_logit, u, rj));
        }

        // Phase fit against the artificial spectrum, then both tone models.
        int v = ops::stack2(t, ops::slice_row(t, h, heads.v_re(ins)),
                            ops::slice_row(t, h, heads.v_im(ins)));
        int coeffs = ops::lsq_solve(t, v, nut_node, sigma_node, nu, b, pcfg.n_har, gcfg);
        int phases = ops::phase_angles(t, coeffs);
        std::vector<int> col_idx(pcfg.n_har);
        for (int hh = 0; hh < pcfg.n_har; ++hh) col_idx[hh] = hh * m + ins;
        int dcol = ops::gather(t, dict_clamped, col_idx);
        int a_d = ops::smul(t, a_node, dcol);
        int amps = ops::stack2(t, ops::mul(t, a_d, ops::cos_(t, phases)),
                               ops::mul(t, a_d, ops::sin_(t, phases)));
        int y_dict = ops::peak_superposition(t, amps, nut_node, sigma_node, nu, b, gcfg);
        int y_dir = ops::peak_superposition(t, coeffs, nut_node, sigma_node, nu, b, gcfg);
        y_dict_nodes[j] = y_dict;
        y_dir_nodes[j] = y_dir;

        res_dict = ops::sub(t, res_dict, y_dict);
        res_dir = ops::sub(t, res_dir, y_dir);

        ToneState& tone = out.frame.tones[j];
        tone.nu = nu;
        tone.nu_tilde = t.val(nut_node)[0];
        tone.instrument = ins;
        tone.b = b;
        tone.a = t.val(a_node)[0];
        tone.sigma = t.val(sigma_node)[0];
        tone.u = u;
        tone.coeffs.resize(pcfg.n_har);
        tone.phases.resize(pcfg.n_har);
        for (int hh = 0; hh < pcfg.n_har; ++hh) {
            tone.coeffs[hh] = node_c(t, coeffs, pcfg.n_har, hh);
            tone.phases[hh] = t.val(phases)[hh];
        }
        out.frame.y_tone[j].resize(n_spc);
        out.frame.y_tone_dir[j].resize(n_spc);
        for (int l = 0; l < n_spc; ++l) {
            out.frame.y_tone[j][l] = node_c(t, y_dict, n_spc, l);
            out.frame.y_tone_dir[j][l] = node_c(t, y_dir, n_spc, l);
        }
    }
    aggregate(out.frame, n_spc);

    // Composite loss on the tape.
    int y_dir_total = y_dir_nodes[0];
    for (int j = 1; j < m; ++j) y_dir_total = ops::add(t, y_dir_total, y_dir_nodes[j]);
    int y_spr = -1;
    int n_off = 0;
    for (int j = 0; j < m; ++j) {
        if (out.frame.tones[j].u == 0) {
            ++n_off;
            continue;
        }
        y_spr = y_spr < 0 ? y_dict_nodes[j] : ops::add(t, y_spr, y_dict_nodes[j]);
    }
    if (y_spr < 0) y_spr = t.constant(Tensor{2, n_spc});

    const LossConfig& lc = pcfg.loss;
    double discount = std::pow(lc.lambda, static_cast<double>(n_off));
    int loss = ops::mul_const(t, dist_abs_node(t, Yc, y_spr, lc), lc.mu1 * discount);
    loss = ops::add(t, loss,
                    ops::mul_const(t, dist_rad_node(t, Yc, y_dir_total, lc), lc.mu2));
    for (int j = 0; j < m; ++j)
        loss = ops::add(t, loss,
                        ops::mul_const(t, dist_rad_node(t, y_dir_nodes[j], y_dict_nodes[j], lc),
                                       lc.mu3 / m));
    out.loss_id = loss;
    out.loss = t.val(loss)[0];

    if (mode == DecodeMode::Sample) {
        int lp = logpi_terms[0];
        for (size_t i = 1; i < logpi_terms.size(); ++i) lp = ops::add(t, lp, logpi_terms[i]);
        int lpr = logpi_r_terms[0];
        for (size_t i = 1; i < logpi_r_terms.size(); ++i)
            lpr = ops::add(t, lpr, logpi_r_terms[i]);
        out.logpi_id = lp;
        out.logpi_r_id = lpr;
        out.log_pi = t.val(lp)[0];
        out.log_pi_r = t.val(lpr)[0];
        out.rho = std::exp(out.log_pi - out.log_pi_r);
        out.finite = std::isfinite(out.loss) && std::isfinite(out.log_pi) &&
                     std::isfinite(out.log_pi_r) && std::isfinite(out.rho);
    } else {
        out.finite = std::isfinite(out.loss);
    }
    return out;
}

FrameGradients frame_gradients(const net::UNet& net, const Dictionary& dict,
                               const ComplexVec& Y, const GaborConfig& gcfg,
                               const PolicyConfig& pcfg, std::uint64_t seed,
                               std::uint64_t iteration, std::uint64_t sample_base) {
    int m = net.config().n_ins;
    auto combos = lift_combinations(pcfg, m);
    size_t s = combos.size();

    std::vector<Rollout> rolls;
    rolls.reserve(s);
    FrameGradients out;
    out.theta.resize(net.num_params());
    for (size_t p = 0; p < net.num_params(); ++p)
        out.theta[p] = net::Tensor(net.param(p).shape);
    out.dict.assign(dict.entries.size(), 0.0);

    double loss_sum = 0.0;
    for (size_t i = 0; i < s; ++i) {
        rolls.push_back(rollout(net, dict, Y, gcfg, pcfg, combos[i], DecodeMode::Sample,
                                seed, iteration, sample_base + i));
        if (!rolls.back().finite) {
            out.finite = false;
            return out;
        }
        loss_sum += rolls.back().loss;
    }
    out.mean_loss = loss_sum / static_cast<double>(s);
    out.loss_all_ones = rolls[0].loss;

    std::vector<double> dict_acc(dict.entries.size(), 0.0);
    double rho_sum = 0.0;
    double inv_s = 1.0 / static_cast<double>(s);
    for (size_t i = 0; i < s; ++i) {
        Rollout& roll = rolls[i];
        Tape& t = *roll.tape;
        t.backward({{roll.loss_id, 1.0}});
        for (size_t p = 0; p < net.num_params(); ++p) {
            if (!t.has_grad(roll.param_ids[p])) continue;
            const net::Tensor& g = t.grad(roll.param_ids[p]);
            for (size_t k = 0; k < g.size(); ++k) out.theta[p][k] += inv_s * g[k];
        }
        if (t.has_grad(roll.dict_id)) {
            const net::Tensor& g = t.grad(roll.dict_id);
            for (size_t k = 0; k < g.size(); ++k) dict_acc[k] += roll.rho * g[k];
        }
        rho_sum += roll.rho;

        t.clear_grads();
        double w = pcfg.policy_scale * (roll.loss - out.mean_loss);
        if (w != 0.0) {
            t.backward({{roll.logpi_r_id, 1.0}});
            for (size_t p = 0; p < net.num_params(); ++p) {
                if (!t.has_grad(roll.param_ids[p])) continue;
                const net::Tensor& g = t.grad(roll.param_ids[p]);
                for (size_t k = 0; k < g.size(); ++k) out.theta[p][k] += inv_s * w * g[k];
            }
        }
        roll.tape.reset();
    }
    if (!(rho_sum > 0.0)) {
        out.finite = false;
        return out;
    }
    for (size_t k = 0; k < dict_acc.size(); ++k) out.dict[k] = dict_acc[k] / rho_sum;

    for (const auto& ten : out.theta)
        for (double v : ten.v)
            if (!std::isfinite(v)) out.finite = false;
    for (double v : out.dict)
        if (!std::isfinite(v)) out.finite = false;
    return out;
}

}  // namespace unmix

#include "unmix/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

void LossConfig::validate() const {
    if (!(q > 0.0) || q > 1.0) throw std::invalid_argument("LossConfig: q must be in (0,1]");
    if (!(delta > 0.0)) throw std::invalid_argument("LossConfig: delta must be positive");
    if (mu1 < 0.0 || mu2 < 0.0 || mu3 < 0.0)
        throw std::invalid_argument("LossConfig: weights must be non-negative");
    if (!(lambda > 0.0) || lambda > 1.0)
        throw std::invalid_argument("LossConfig: lambda must be in (0,1]");
}

double dist_abs(const ComplexVec& Y, const ComplexVec& y, const LossConfig& cfg) {
    if (Y.size() != y.size())
        throw std::invalid_argument("dist_abs: length mismatch");
    double sum = 0.0;
    for (size_t l = 0; l < Y.size(); ++l) {
        double d = std::pow(std::abs(Y[l]) + cfg.delta, cfg.q) -
                   std::pow(std::abs(y[l]) + cfg.delta, cfg.q);
        sum += d * d;
    }
    return 0.5 * sum;
}

namespace {

inline std::complex<double> lifted_radial(std::complex<double> v, const LossConfig& cfg) {
    double r = std::abs(v);
    return v * (std::pow(r + cfg.delta, cfg.q) / (r + cfg.eps_rad));
}

}  // namespace

double dist_rad(const ComplexVec& Y, const ComplexVec& y, const LossConfig& cfg) {
    if (Y.size() != y.size())
        throw std::invalid_argument("dist_rad: length mismatch");
    double sum = 0.0;
    for (size_t l = 0; l < Y.size(); ++l) {
        std::complex<double> d = lifted_radial(Y[l], cfg) - lifted_radial(y[l], cfg);
        sum += std::norm(d);
    }
    return 0.5 * sum;
}

double total_loss(const FramePrediction& frame, const ComplexVec& Y,
                  const LossConfig& cfg) {
    int m = static_cast<int>(frame.tones.size());
    int dropped = 0;
    for (const ToneState& t : frame.tones)
        if (t.u == 0) ++dropped;
    double loss = cfg.mu1 * dist_abs(Y, frame.y_spr, cfg) * std::pow(cfg.lambda, dropped) +
                  cfg.mu2 * dist_rad(Y, frame.y_dir, cfg);
    double reg = 0.0;
    for (int j = 0; j < m; ++j)
        reg += dist_rad(frame.y_tone_dir[j], frame.y_tone[j], cfg);
    if (m > 0) loss += cfg.mu3 / m * reg;
    return loss;
}

double dict_bound_loss(const Dictionary& dict) {
    double sum = 0.0;
    for (int ins = 0; ins < dict.n_ins; ++ins) {
        double mx = 0.0;
        for (int h = 0; h < dict.n_har; ++h) mx = std::max(mx, dict.at_clamped(h, ins));
        if (!(mx > 0.0))
            throw std::domain_error("dict_bound_loss: all-zero dictionary column");
        double lg = std::log(mx);
        sum += lg * lg;
    }
    return sum / dict.n_ins;
}

std::vector<double> dict_bound_loss_grad(const Dictionary& dict) {
    std::vector<double> grad(dict.entries.size(), 0.0);
    for (int ins = 0; ins < dict.n_ins; ++ins) {
        double mx = 0.0;
        int arg = -1;
        for (int h = 0; h < dict.n_har; ++h) {
            double v = dict.at_clamped(h, ins);
            if (v > mx) {
                mx = v;
                arg = h;
            }
        }
        if (arg < 0)
            throw std::domain_error("dict_bound_loss_grad: all-zero dictionary column");
        grad[static_cast<size_t>(arg) * dict.n_ins + ins] =
            2.0 * std::log(mx) / (mx * dict.n_ins);
    }
    return grad;
}

}  // namespace unmix

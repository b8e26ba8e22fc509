#include "unmix/metrics.hpp"

#include "unmix/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace unmix {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double db_ratio(double num, double den) {
    // A vanished numerator dominates: a zero estimate has no target component
    // and must read as the floor even when the error energies also vanish.
    double db;
    if (num <= 0.0)
        db = -300.0;
    else if (den <= 0.0)
        db = 300.0;
    else
        db = 10.0 * std::log10(num / den);
    return std::min(300.0, std::max(-300.0, db));
}

}  // namespace

std::vector<BssScores> bss_eval(const std::vector<TimeSignal>& estimates,
                                const std::vector<TimeSignal>& references) {
    size_t m = references.size();
    if (estimates.size() != m || m == 0)
        throw std::invalid_argument("bss_eval: track count mismatch");
    size_t n = references[0].samples.size();
    for (const auto& s : references)
        if (s.samples.size() != n)
            throw std::invalid_argument("bss_eval: reference length mismatch");
    for (const auto& s : estimates)
        if (s.samples.size() != n)
            throw std::invalid_argument("bss_eval: estimate length mismatch");

    // Gram matrix of the references; Cholesky failure signals dependence.
    std::vector<double> gram(m * m);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j <= i; ++j) {
            double v = dot(references[i].samples, references[j].samples);
            gram[i * m + j] = v;
            gram[j * m + i] = v;
        }
    std::vector<double> chol = gram;
    try {
        cholesky_factor(chol, static_cast<int>(m));
    } catch (const std::domain_error&) {
        throw std::domain_error("bss_eval: references are linearly dependent");
    }

    std::vector<BssScores> out(m);
    for (size_t i = 0; i < m; ++i) {
        const std::vector<double>& e = estimates[i].samples;
        std::vector<double> inner(m);
        for (size_t j = 0; j < m; ++j) inner[j] = dot(e, references[j].samples);

        // s_target: projection onto the matching reference alone.
        double own = gram[i * m + i];
        double ct = own > 0.0 ? inner[i] / own : 0.0;

        // Full projection onto the span of all references.
        std::vector<double> coef = inner;
        cholesky_solve(chol, static_cast<int>(m), coef);

        double e_target = 0.0, e_interf = 0.0, e_artif = 0.0;
        for (size_t k = 0; k < n; ++k) {
            double st = ct * references[i].samples[k];
            double proj = 0.0;
            for (size_t j = 0; j < m; ++j) proj += coef[j] * references[j].samples[k];
            double ei = proj - st;
            double ea = e[k] - proj;
            e_target += st * st;
            e_interf += ei * ei;
            e_artif += ea * ea;
        }
        out[i].sdr_db = db_ratio(e_target, e_interf + e_artif);
        out[i].sir_db = db_ratio(e_target, e_interf);
        out[i].sar_db = db_ratio(e_target + e_interf, e_artif);
    }
    return out;
}

}  // namespace unmix

#pragma once

#include "unmix/gabor.hpp"

#include <vector>

namespace unmix {

struct BssScores {
    double sdr_db = 0.0;
    double sir_db = 0.0;
    double sar_db = 0.0;
};

// BSS Eval (version-2 compatible, no shift allowance): each estimate is
// decomposed into its orthogonal projection onto its own reference (target),
// the additional projection onto the span of all references (interference),
// and the residual (artifacts).  Ratios are reported in dB, capped at +-300.
// Throws std::invalid_argument on length/count mismatch and
// std::domain_error if the references are linearly dependent.
std::vector<BssScores> bss_eval(const std::vector<TimeSignal>& estimates,
                                const std::vector<TimeSignal>& references);

}  // namespace unmix

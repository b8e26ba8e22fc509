#pragma once

#include "unmix/policy.hpp"

namespace unmix {

// Deterministic mode decoding of one frame.  Y must be normalized to unit
// maximum magnitude; the result is a pure function of (Y, net, dict).
FramePrediction decode_frame(const net::UNet& net, const Dictionary& dict,
                             const ComplexVec& Y, const GaborConfig& gcfg,
                             const PolicyConfig& pcfg);

// Full-signal separation: analyze on the (unaugmented) lattice, decode every
// frame, route each tone's direct-prediction spectrum to its instrument, and
// synthesize one track per instrument.  Tones with u = 0 are dropped.
std::vector<TimeSignal> separate(const TimeSignal& x, const net::UNet& net,
                                 const Dictionary& dict, const GaborConfig& gcfg,
                                 const PolicyConfig& pcfg);

}  // namespace unmix

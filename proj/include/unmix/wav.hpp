#pragma once

#include "unmix/gabor.hpp"

#include <string>

namespace unmix {

// Reads a RIFF/WAVE file: 16- or 24-bit PCM or 32-bit float.  Stereo (or any
// multichannel) input is downmixed by channel averaging; if `warning` is
// given it receives a note about the downmix.  Throws std::runtime_error on
// I/O or format problems, naming the path.
TimeSignal read_wav(const std::string& path, std::string* warning = nullptr);

// Writes a mono 32-bit float WAVE file.
void write_wav(const std::string& path, const TimeSignal& signal);

}  // namespace unmix

#pragma once

#include "unmix/net/unet.hpp"
#include "unmix/policy.hpp"
#include "unmix/trainer.hpp"

#include <string>

namespace unmix {

// Everything the CLI needs, mirrored in a flat `key = value` text format
// (comments start with '#'; lists are comma-separated).  Unknown keys and
// malformed values raise std::runtime_error with line diagnostics.
struct AppConfig {
    GaborConfig gabor;
    net::UNetConfig unet;
    LossConfig loss;
    TrainConfig train;
    int n_har = 16;
    // sigma_min = sigma_min_factor / (2 pi zeta), i.e. a quarter of the
    // analysis peak width by default.
    double sigma_min_factor = 0.25;

    PolicyConfig policy() const;
    void validate() const;
};

AppConfig parse_config(const std::string& text);
std::string serialize_config(const AppConfig& cfg);
AppConfig load_config_file(const std::string& path);

}  // namespace unmix

#include "unmix/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace unmix {

PolicyConfig AppConfig::policy() const {
    PolicyConfig p;
    p.loss = loss;
    p.n_har = n_har;
    p.sigma_min_hz = sigma_min_factor / (2.0 * M_PI * gabor.zeta_s);
    return p;
}

void AppConfig::validate() const {
    gabor.validate();
    unet.validate();
    loss.validate();
    train.validate();
    if (n_har < 1) throw std::invalid_argument("config: n_har must be >= 1");
    if (!(sigma_min_factor > 0.0))
        throw std::invalid_argument("config: sigma_min_factor must be positive");
    if (unet.n_spc != gabor.n_spc)
        throw std::invalid_argument("config: unet.n_spc must match gabor.n_spc");
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt_list_i(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string fmt_list_u(const std::vector<std::uint64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

struct FieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double to_f(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw FieldError("not a number: '" + s + "'");
    return v;
}

long long to_i(const std::string& s) {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw FieldError("not an integer: '" + s + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void apply(AppConfig& c, const std::string& key, const std::string& value) {
    auto ilist = [&] {
        std::vector<int> v;
        for (const auto& s : split_list(value)) v.push_back(static_cast<int>(to_i(s)));
        return v;
    };
    if (key == "gabor.sample_rate_hz") c.gabor.sample_rate_hz = to_f(value);
    else if (key == "gabor.zeta_s") c.gabor.zeta_s = to_f(value);
    else if (key == "gabor.alpha_s") c.gabor.alpha_s = to_f(value);
    else if (key == "gabor.beta_hz") c.gabor.beta_hz = to_f(value);
    else if (key == "gabor.n_spc") { c.gabor.n_spc = static_cast<int>(to_i(value)); c.unet.n_spc = c.gabor.n_spc; }
    else if (key == "unet.n_ins") c.unet.n_ins = static_cast<int>(to_i(value));
    else if (key == "unet.strides") c.unet.strides = ilist();
    else if (key == "unet.channels") c.unet.channels = ilist();
    else if (key == "unet.kernel") c.unet.kernel = static_cast<int>(to_i(value));
    else if (key == "unet.trunk_channels") c.unet.trunk_channels = static_cast<int>(to_i(value));
    else if (key == "unet.nu_min") c.unet.nu_min = static_cast<int>(to_i(value));
    else if (key == "unet.nu_max") c.unet.nu_max = static_cast<int>(to_i(value));
    else if (key == "unet.coord_start") c.unet.coord_start = to_f(value);
    else if (key == "unet.coord_end") c.unet.coord_end = to_f(value);
    else if (key == "unet.noise_std") c.unet.noise_std = to_f(value);
    else if (key == "loss.q") c.loss.q = to_f(value);
    else if (key == "loss.delta") c.loss.delta = to_f(value);
    else if (key == "loss.mu1") c.loss.mu1 = to_f(value);
    else if (key == "loss.mu2") c.loss.mu2 = to_f(value);
    else if (key == "loss.mu3") c.loss.mu3 = to_f(value);
    else if (key == "loss.lambda") c.loss.lambda = to_f(value);
    else if (key == "loss.eps_rad") c.loss.eps_rad = to_f(value);
    else if (key == "train.iterations") c.train.iterations = to_i(value);
    else if (key == "train.batch_size") c.train.batch_size = static_cast<int>(to_i(value));
    else if (key == "train.lr_theta") c.train.lr_theta = to_f(value);
    else if (key == "train.lr_dict") c.train.lr_dict = to_f(value);
    else if (key == "train.beta1") c.train.beta1 = to_f(value);
    else if (key == "train.beta2") c.train.beta2 = to_f(value);
    else if (key == "train.eps") c.train.eps = to_f(value);
    else if (key == "train.augment_factor") c.train.augment_factor = to_f(value);
    else if (key == "train.seeds") {
        c.train.seeds.clear();
        for (const auto& s : split_list(value))
            c.train.seeds.push_back(static_cast<std::uint64_t>(to_i(s)));
    }
    else if (key == "train.freeze_dictionary") c.train.freeze_dictionary = to_i(value) != 0;
    else if (key == "train.checkpoint_every") c.train.checkpoint_every = to_i(value);
    else if (key == "n_har") c.n_har = static_cast<int>(to_i(value));
    else if (key == "sigma_min_factor") c.sigma_min_factor = to_f(value);
    else throw FieldError("unknown key '" + key + "'");
}

}  // namespace

AppConfig parse_config(const std::string& text) {
    AppConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t eq = line.find('=');
        std::string stripped = line;
        stripped.erase(0, stripped.find_first_not_of(" \t\r"));
        if (stripped.empty()) continue;
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected 'key = value'");
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            apply(c, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ", field '" +
                                     key + "': " + e.what());
        }
    }
    return c;
}

std::string serialize_config(const AppConfig& c) {
    std::ostringstream os;
    os << "gabor.sample_rate_hz = " << fmt(c.gabor.sample_rate_hz) << "\n";
    os << "gabor.zeta_s = " << fmt(c.gabor.zeta_s) << "\n";
    os << "gabor.alpha_s = " << fmt(c.gabor.alpha_s) << "\n";
    os << "gabor.beta_hz = " << fmt(c.gabor.beta_hz) << "\n";
    os << "gabor.n_spc = " << c.gabor.n_spc << "\n";
    os << "unet.n_ins = " << c.unet.n_ins << "\n";
    os << "unet.strides = " << fmt_list_i(c.unet.strides) << "\n";
    os << "unet.channels = " << fmt_list_i(c.unet.channels) << "\n";
    os << "unet.kernel = " << c.unet.kernel << "\n";
    os << "unet.trunk_channels = " << c.unet.trunk_channels << "\n";
    os << "unet.nu_min = " << c.unet.nu_min << "\n";
    os << "unet.nu_max = " << c.unet.nu_max << "\n";
    os << "unet.coord_start = " << fmt(c.unet.coord_start) << "\n";
    os << "unet.coord_end = " << fmt(c.unet.coord_end) << "\n";
    os << "unet.noise_std = " << fmt(c.unet.noise_std) << "\n";
    os << "loss.q = " << fmt(c.loss.q) << "\n";
    os << "loss.delta = " << fmt(c.loss.delta) << "\n";
    os << "loss.mu1 = " << fmt(c.loss.mu1) << "\n";
    os << "loss.mu2 = " << fmt(c.loss.mu2) << "\n";
    os << "loss.mu3 = " << fmt(c.loss.mu3) << "\n";
    os << "loss.lambda = " << fmt(c.loss.lambda) << "\n";
    os << "loss.eps_rad = " << fmt(c.loss.eps_rad) << "\n";
    os << "train.iterations = " << c.train.iterations << "\n";
    os << "train.batch_size = " << c.train.batch_size << "\n";
    os << "train.lr_theta = " << fmt(c.train.lr_theta) << "\n";
    os << "train.lr_dict = " << fmt(c.train.lr_dict) << "\n";
    os << "train.beta1 = " << fmt(c.train.beta1) << "\n";
    os << "train.beta2 = " << fmt(c.train.beta2) << "\n";
    os << "train.eps = " << fmt(c.train.eps) << "\n";
    os << "train.augment_factor = " << fmt(c.train.augment_factor) << "\n";
    os << "train.seeds = " << fmt_list_u(c.train.seeds) << "\n";
    os << "train.freeze_dictionary = " << (c.train.freeze_dictionary ? 1 : 0) << "\n";
    os << "train.checkpoint_every = " << c.train.checkpoint_every << "\n";
    os << "n_har = " << c.n_har << "\n";
    os << "sigma_min_factor = " << fmt(c.sigma_min_factor) << "\n";
    return os.str();
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config(os.str());
}

}  // namespace unmix

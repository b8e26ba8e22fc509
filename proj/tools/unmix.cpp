#include "unmix/checkpoint.hpp"
#include "unmix/config.hpp"
#include "unmix/inference.hpp"
#include "unmix/metrics.hpp"
#include "unmix/trainer.hpp"
#include "unmix/wav.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace unmix;

namespace {

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "iteration,d_abs,d_rad,reg\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n", r.iteration,
                      r.d_abs, r.d_rad, r.reg);
        f << buf;
    }
}

int cmd_train(const std::string& input, const std::string& output_dir,
              const std::string& config_path, const std::string& resume,
              std::vector<std::uint64_t> seeds, long long iterations,
              int instruments, bool freeze_dict) {
    AppConfig cfg = config_path.empty() ? AppConfig{} : load_config_file(config_path);
    if (!seeds.empty()) cfg.train.seeds = seeds;
    if (iterations >= 0) cfg.train.iterations = iterations;
    if (instruments > 0) cfg.unet.n_ins = instruments;
    if (freeze_dict) cfg.train.freeze_dictionary = true;

    std::string warn;
    TimeSignal x = read_wav(input, &warn);
    if (!warn.empty()) std::cerr << "warning: " << input << ": " << warn << "\n";
    cfg.gabor.sample_rate_hz = x.sample_rate_hz;
    cfg.validate();

    fs::create_directories(output_dir);
    {
        std::ofstream f(output_dir + "/config.txt", std::ios::trunc);
        f << serialize_config(cfg);
    }

    GaborConfig augmented = cfg.gabor;
    augmented.alpha_s = cfg.gabor.alpha_s / cfg.train.augment_factor;
    augmented.validate();
    Spectrogram Z = analyze(x, augmented);
    PolicyConfig pcfg = cfg.policy();

    for (std::uint64_t seed : cfg.train.seeds) {
        std::string tag = "seed" + std::to_string(seed);
        std::string ckpt_path = output_dir + "/" + tag + ".ckpt";
        TrainState state = resume.empty()
                               ? init_train_state(cfg.unet, cfg.n_har, seed)
                               : load_checkpoint(resume);
        save_checkpoint(ckpt_path, state);
        std::vector<HistoryRow> history;
        auto on_ckpt = [&](const TrainState& s, const HistoryRow& row) {
            save_checkpoint(ckpt_path, s);
            history.push_back(row);
            write_history_csv(output_dir + "/history." + tag + ".csv", history);
            std::cerr << tag << " iter " << row.iteration << " d_abs " << row.d_abs
                      << " d_rad " << row.d_rad << " reg " << row.reg << "\n";
        };
        TrainResult res = train(std::move(state), Z, augmented, pcfg, cfg.train, on_ckpt);
        save_checkpoint(ckpt_path, res.state);
        write_history_csv(output_dir + "/history." + tag + ".csv", res.history);
        if (res.numeric_failure)
            std::cerr << tag << ": stopped early after repeated non-finite gradients ("
                      << res.state.skipped_steps << " skipped steps)\n";
    }
    return 0;
}

int cmd_separate(const std::string& input, const std::string& output_dir,
                 const std::string& ckpt_path, const std::string& config_path) {
    AppConfig cfg = config_path.empty() ? AppConfig{} : load_config_file(config_path);
    TrainState state = load_checkpoint(ckpt_path);
    std::string warn;
    TimeSignal x = read_wav(input, &warn);
    if (!warn.empty()) std::cerr << "warning: " << input << ": " << warn << "\n";
    cfg.gabor.sample_rate_hz = x.sample_rate_hz;
    cfg.gabor.n_spc = state.net.config().n_spc;
    cfg.unet = state.net.config();
    cfg.n_har = state.dict.n_har;
    cfg.validate();

    fs::create_directories(output_dir);
    auto tracks = separate(x, state.net, state.dict, cfg.gabor, cfg.policy());
    for (size_t i = 0; i < tracks.size(); ++i) {
        std::string path = output_dir + "/" + stem_of(input) + ".inst" +
                           std::to_string(i + 1) + ".wav";
        write_wav(path, tracks[i]);
        std::cout << path << "\n";
    }
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& estimates,
                 const std::vector<std::string>& references,
                 const std::string& output) {
    if (estimates.size() != references.size() || estimates.empty())
        throw std::runtime_error("evaluate: need matching --estimates and --references");
    std::vector<TimeSignal> est, ref;
    for (const auto& p : estimates) est.push_back(read_wav(p));
    for (const auto& p : references) ref.push_back(read_wav(p));
    auto scores = bss_eval(est, ref);

    std::ostringstream table;
    table << "track,sdr_db,sir_db,sar_db\n";
    char buf[160];
    for (size_t i = 0; i < scores.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f\n", stem_of(estimates[i]).c_str(),
                      scores[i].sdr_db, scores[i].sir_db, scores[i].sar_db);
        table << buf;
    }
    std::cout << table.str();
    if (!output.empty()) {
        std::ofstream f(output, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + output);
        f << table.str();
    }
    return 0;
}

int cmd_plot_data(const std::string& input_dir, const std::string& output) {
    std::ostringstream merged;
    merged << "seed,iteration,d_abs,d_rad,reg\n";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input_dir)) {
        std::string name = e.path().filename().string();
        if (name.rfind("history.seed", 0) == 0 && e.path().extension() == ".csv")
            files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::runtime_error("plot-data: no history.seed*.csv in " + input_dir);
    for (const auto& p : files) {
        std::string name = p.filename().string();  // history.seed<N>.csv
        std::string seed = name.substr(12, name.size() - 12 - 4);
        std::ifstream f(p);
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line))
            if (!line.empty()) merged << seed << "," << line << "\n";
    }
    if (output.empty()) {
        std::cout << merged.str();
    } else {
        std::ofstream f(output, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + output);
        f << merged.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unmix: blind harmonic source separation"};
    app.require_subcommand(1);

    std::string input, output_dir = ".", config_path, ckpt_path, resume, output;
    std::vector<std::uint64_t> seeds;
    long long iterations = -1;
    int instruments = 0;
    bool freeze_dict = false;
    std::vector<std::string> estimates, references;

    auto* train_cmd = app.add_subcommand("train", "fit network and dictionary to a recording");
    train_cmd->add_option("--input", input, "input WAV")->required();
    train_cmd->add_option("--output-dir", output_dir, "output directory");
    train_cmd->add_option("--config", config_path, "config file");
    train_cmd->add_option("--checkpoint", resume, "checkpoint to resume from");
    train_cmd->add_option("--seeds,--seed", seeds, "ensemble seeds");
    train_cmd->add_option("--iterations", iterations, "training iterations");
    train_cmd->add_option("--instruments", instruments, "number of instruments");
    train_cmd->add_flag("--freeze-dictionary", freeze_dict, "keep the dictionary fixed");

    auto* sep_cmd = app.add_subcommand("separate", "write one track per instrument");
    sep_cmd->add_option("--input", input, "input WAV")->required();
    sep_cmd->add_option("--output-dir", output_dir, "output directory");
    sep_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    sep_cmd->add_option("--config", config_path, "config file");

    auto* eval_cmd = app.add_subcommand("evaluate", "SDR/SIR/SAR against references");
    eval_cmd->add_option("--estimates", estimates, "estimated tracks")->required();
    eval_cmd->add_option("--references", references, "reference tracks")->required();
    eval_cmd->add_option("--output", output, "CSV output path");

    auto* plot_cmd = app.add_subcommand("plot-data", "merge training histories into one CSV");
    plot_cmd->add_option("--input-dir", input, "training output directory")->required();
    plot_cmd->add_option("--output", output, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(input, output_dir, config_path, resume, seeds, iterations,
                             instruments, freeze_dict);
        if (sep_cmd->parsed())
            return cmd_separate(input, output_dir, ckpt_path, config_path);
        if (eval_cmd->parsed()) return cmd_evaluate(estimates, references, output);
        if (plot_cmd->parsed()) return cmd_plot_data(input, output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgwc/model.hpp"
#include "dgwc/train.hpp"
#include "dgwc/wavelet.hpp"

namespace dgwc {

// Resolved run configuration: a key=value config file fills defaults, CLI
// flags override.
struct ExperimentConfig {
    std::string dataset_content;
    std::string dataset_cites;
    std::string mode = "deepgwc";    // gcn | gwnn | appnp-like | gcnii-like | deepgwc
    std::string wavelet = "exact";   // exact | cheby:<order>
    std::string split = "standard";  // standard | rate:<r>
    ModelConfig model;               // classes/input_dim filled after loading

    double lr = 0.001;
    double weight_decay = 5e-4;
    std::size_t epochs = 1500;
    std::size_t patience = 100;
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    bool row_normalize = true;

    std::string out;         // records destination; empty = stdout
    std::string checkpoint;  // written by train, read by dump-embeddings
    std::string cache_dir;   // wavelet basis cache; empty = disabled

    std::vector<std::size_t> depths;  // sweep-depth
    std::vector<std::string> modes;   // sweep-depth; empty = {mode}

    bool corrupt_gradient = false;  // gradcheck negative-control hook
};

// Applies one of the named hyperparameter presets onto the model config.
void apply_mode(ModelConfig& config, const std::string& mode);

struct WaveletSpec {
    WaveletMethod method = WaveletMethod::exact;
    int order = 0;
};
WaveletSpec parse_wavelet_spec(const std::string& spec);

struct SplitSpec {
    bool standard = true;
    double rate = 0.0;
};
SplitSpec parse_split_spec(const std::string& spec);

int cmd_train(const ExperimentConfig& config);
int cmd_sweep_depth(const ExperimentConfig& config);
int cmd_wavelet_stats(const ExperimentConfig& config);
int cmd_gradcheck(const ExperimentConfig& config);
int cmd_dump_embeddings(const ExperimentConfig& config);

// Full command-line entry ("train --alpha 0.3 ...`); exposed so tests can
// drive the CLI in-process.
int run_cli(const std::vector<std::string>& args);

}  // namespace dgwc

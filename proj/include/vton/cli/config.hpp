#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "vton/core/errors.hpp"

namespace vton::cli {

using nlohmann::json;

// One flat config with per-stage sections; an ablation is a one-flag diff.
struct RunConfig {
    uint64_t seed = 1234;
    std::string output_root = "out";
    int canvas_h = 64;
    int canvas_w = 48;
    int threads = 2;

    struct Data {
        int count = 500;
        double train_fraction = 0.9;
        int lattice = 3;  // control-point lattice side (K = lattice^2)
        double jitter_sigma_frac = 0.04;
        double max_disp_frac = 0.15;
        double fill_value = 0.5;
        int dilate_radius = 2;
    } data;

    struct Autoencoder {
        int downsample = 4;
        int latent_channels = 4;
        double kl_weight = 1e-6;
        int steps = 4000;
        int batch = 16;
        double lr = 1e-3;
    } autoencoder;

    struct Flow {
        int epochs = 100;
        int batch = 32;
        double lr = 5e-5;
        double decay_start_frac = 0.3;
        double lambda_per = 0.0, lambda_sec = 0.0, lambda_tv = 0.0;  // set per role below
    } warp, flatten;

    struct Diffusion {
        std::string schedule = "linear";
        int T = 200;
        int steps = 20000;
        int batch = 8;
        double lr = 2e-5;
        double lr_init = 1e-6;
        int warmup_steps = 3000;
        double lambda_cons = 0.15;
        double cfg_dropout = 0.2;
        int base = 32;
        int token_dim = 32;
        int attn_dim = 32;
        int time_dim = 64;
    } diffusion;

    struct Ablation {
        bool prior_branch = true;
        bool cons_loss = true;
        bool global_cond = true;
    } ablation;

    struct Sampler {
        int steps = 50;
        std::string init_mode = "clothes_posterior";
        double guidance_scale = 1.0;
        bool freeu = true;
        double b1 = 1.1, b2 = 1.2, s1 = 0.9, s2 = 0.6;
        uint64_t seed = 7;
    } sampler;

    struct Eval {
        std::string setting = "paired";
    } eval;

    RunConfig() {
        warp.lambda_per = 0.2;
        warp.lambda_sec = 0.01;
        warp.lambda_tv = 6.0;
        flatten.lambda_per = 0.1;
        flatten.lambda_sec = 10.0;
        flatten.lambda_tv = 0.01;
    }
};

json config_to_json(const RunConfig& c);
RunConfig config_from_json(const json& j);  // unknown keys and bad values throw ArgError
RunConfig load_config(const std::filesystem::path& path);

// fingerprint over the canonical config (output_root and threads excluded)
std::string config_fingerprint(const RunConfig& c);

}  // namespace vton::cli

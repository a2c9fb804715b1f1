#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "vton/cli/commands.hpp"

using namespace vton;

int main(int argc, char** argv) {
    CLI::App app{"latent-diffusion virtual try-on on procedural synthetic data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_root;
    int threads = -1;
    app.add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
    app.add_option("--output-root", output_root, "override the config output root");
    app.add_option("--threads", threads, "worker threads for training batches");

    struct Sub {
        CLI::App* app;
        cli::Flags flags;
    };
    std::map<std::string, Sub> subs;
    auto add_sub = [&](const std::string& name, const std::string& desc,
                       const std::vector<std::string>& opts) {
        CLI::App* s = app.add_subcommand(name, desc);
        subs[name] = Sub{s, {}};
        Sub& ref = subs[name];
        for (const std::string& o : opts)
            s->add_option_function<std::string>(
                "--" + o, [&ref, o](const std::string& v) { ref.flags[o] = v; });
    };
    add_sub("gen-data", "generate the synthetic dataset", {"out"});
    add_sub("train-autoencoder", "train the latent autoencoder", {"data", "out"});
    add_sub("train-warp", "train the garment warping network", {"data", "out"});
    add_sub("train-flatten", "train the clothes flattening network", {"data", "out"});
    add_sub("train-diffusion", "train the try-on diffusion UNet", {"data", "out"});
    add_sub("sample", "generate one try-on image",
            {"data", "person", "garment", "init", "steps", "seed", "freeu", "trace"});
    add_sub("eval", "evaluate on the test split", {"data", "setting"});
    add_sub("ablate", "run the ablation lattice and merge a comparison table", {"data"});

    CLI11_PARSE(app, argc, argv);

    try {
        cli::RunConfig cfg = config_path.empty() ? cli::RunConfig{} : cli::load_config(config_path);
        if (const char* env_root = std::getenv("VTON_OUTPUT_ROOT")) cfg.output_root = env_root;
        if (!output_root.empty()) cfg.output_root = output_root;
        if (threads > 0) cfg.threads = threads;

        for (auto& [name, sub] : subs) {
            if (!sub.app->parsed()) continue;
            if (name == "gen-data") return cli::cmd_gen_data(cfg, sub.flags);
            if (name == "train-autoencoder") return cli::cmd_train_autoencoder(cfg, sub.flags);
            if (name == "train-warp") return cli::cmd_train_warp(cfg, sub.flags);
            if (name == "train-flatten") return cli::cmd_train_flatten(cfg, sub.flags);
            if (name == "train-diffusion") return cli::cmd_train_diffusion(cfg, sub.flags);
            if (name == "sample") return cli::cmd_sample(cfg, sub.flags);
            if (name == "eval") return cli::cmd_eval(cfg, sub.flags);
            if (name == "ablate") return cli::cmd_ablate(cfg, sub.flags);
        }
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code_for(e);
    }
}

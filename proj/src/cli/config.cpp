#include "vton/cli/config.hpp"

#include <fstream>

#include "vton/core/rng.hpp"

namespace vton::cli {

json config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["output_root"] = c.output_root;
    j["canvas"] = {c.canvas_h, c.canvas_w};
    j["threads"] = c.threads;
    j["data"] = {{"count", c.data.count},
                 {"train_fraction", c.data.train_fraction},
                 {"lattice", c.data.lattice},
                 {"jitter_sigma_frac", c.data.jitter_sigma_frac},
                 {"max_disp_frac", c.data.max_disp_frac},
                 {"fill_value", c.data.fill_value},
                 {"dilate_radius", c.data.dilate_radius}};
    j["autoencoder"] = {{"downsample", c.autoencoder.downsample},
                        {"latent_channels", c.autoencoder.latent_channels},
                        {"kl_weight", c.autoencoder.kl_weight},
                        {"steps", c.autoencoder.steps},
                        {"batch", c.autoencoder.batch},
                        {"lr", c.autoencoder.lr}};
    auto flow_j = [](const RunConfig::Flow& f) {
        return json{{"epochs", f.epochs},
                    {"batch", f.batch},
                    {"lr", f.lr},
                    {"decay_start_frac", f.decay_start_frac},
                    {"lambda_per", f.lambda_per},
                    {"lambda_sec", f.lambda_sec},
                    {"lambda_tv", f.lambda_tv}};
    };
    j["warp"] = flow_j(c.warp);
    j["flatten"] = flow_j(c.flatten);
    j["diffusion"] = {{"schedule", c.diffusion.schedule},
                      {"T", c.diffusion.T},
                      {"steps", c.diffusion.steps},
                      {"batch", c.diffusion.batch},
                      {"lr", c.diffusion.lr},
                      {"lr_init", c.diffusion.lr_init},
                      {"warmup_steps", c.diffusion.warmup_steps},
                      {"lambda_cons", c.diffusion.lambda_cons},
                      {"cfg_dropout", c.diffusion.cfg_dropout},
                      {"base", c.diffusion.base},
                      {"token_dim", c.diffusion.token_dim},
                      {"attn_dim", c.diffusion.attn_dim},
                      {"time_dim", c.diffusion.time_dim}};
    j["ablation"] = {{"prior_branch", c.ablation.prior_branch},
                     {"cons_loss", c.ablation.cons_loss},
                     {"global_cond", c.ablation.global_cond}};
    j["sampler"] = {{"steps", c.sampler.steps},
                    {"init_mode", c.sampler.init_mode},
                    {"guidance_scale", c.sampler.guidance_scale},
                    {"freeu", c.sampler.freeu},
                    {"b1", c.sampler.b1},
                    {"b2", c.sampler.b2},
                    {"s1", c.sampler.s1},
                    {"s2", c.sampler.s2},
                    {"seed", c.sampler.seed}};
    j["eval"] = {{"setting", c.eval.setting}};
    return j;
}

static void collect_unknown(const json& user, const json& schema, const std::string& prefix,
                            std::vector<std::string>& unknown) {
    for (auto& [key, val] : user.items()) {
        std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) {
            unknown.push_back(path);
            continue;
        }
        if (val.is_object() && schema.at(key).is_object()) collect_unknown(val, schema.at(key), path, unknown);
    }
}

static void merge_into(json& base, const json& user) {
    for (auto& [key, val] : user.items()) {
        if (val.is_object() && base.contains(key) && base.at(key).is_object())
            merge_into(base.at(key), val);
        else
            base[key] = val;
    }
}

RunConfig config_from_json(const json& user) {
    json schema = config_to_json(RunConfig{});
    std::vector<std::string> unknown;
    collect_unknown(user, schema, "", unknown);
    if (!unknown.empty()) {
        std::string msg = "config: unknown keys:";
        for (const std::string& k : unknown) msg += " " + k;
        throw ArgError(msg);
    }
    json j = schema;
    merge_into(j, user);

    RunConfig c;
    c.seed = j.at("seed").get<uint64_t>();
    c.output_root = j.at("output_root").get<std::string>();
    c.canvas_h = j.at("canvas")[0].get<int>();
    c.canvas_w = j.at("canvas")[1].get<int>();
    c.threads = j.at("threads").get<int>();
    const json& d = j.at("data");
    c.data = {d.at("count").get<int>(),         d.at("train_fraction").get<double>(),
              d.at("lattice").get<int>(),       d.at("jitter_sigma_frac").get<double>(),
              d.at("max_disp_frac").get<double>(), d.at("fill_value").get<double>(),
              d.at("dilate_radius").get<int>()};
    const json& a = j.at("autoencoder");
    c.autoencoder = {a.at("downsample").get<int>(), a.at("latent_channels").get<int>(),
                     a.at("kl_weight").get<double>(), a.at("steps").get<int>(), a.at("batch").get<int>(),
                     a.at("lr").get<double>()};
    auto flow_c = [](const json& f) {
        RunConfig::Flow out;
        out.epochs = f.at("epochs").get<int>();
        out.batch = f.at("batch").get<int>();
        out.lr = f.at("lr").get<double>();
        out.decay_start_frac = f.at("decay_start_frac").get<double>();
        out.lambda_per = f.at("lambda_per").get<double>();
        out.lambda_sec = f.at("lambda_sec").get<double>();
        out.lambda_tv = f.at("lambda_tv").get<double>();
        return out;
    };
    c.warp = flow_c(j.at("warp"));
    c.flatten = flow_c(j.at("flatten"));
    const json& df = j.at("diffusion");
    c.diffusion.schedule = df.at("schedule").get<std::string>();
    c.diffusion.T = df.at("T").get<int>();
    c.diffusion.steps = df.at("steps").get<int>();
    c.diffusion.batch = df.at("batch").get<int>();
    c.diffusion.lr = df.at("lr").get<double>();
    c.diffusion.lr_init = df.at("lr_init").get<double>();
    c.diffusion.warmup_steps = df.at("warmup_steps").get<int>();
    c.diffusion.lambda_cons = df.at("lambda_cons").get<double>();
    c.diffusion.cfg_dropout = df.at("cfg_dropout").get<double>();
    c.diffusion.base = df.at("base").get<int>();
    c.diffusion.token_dim = df.at("token_dim").get<int>();
    c.diffusion.attn_dim = df.at("attn_dim").get<int>();
    c.diffusion.time_dim = df.at("time_dim").get<int>();
    const json& ab = j.at("ablation");
    c.ablation = {ab.at("prior_branch").get<bool>(), ab.at("cons_loss").get<bool>(),
                  ab.at("global_cond").get<bool>()};
    const json& s = j.at("sampler");
    c.sampler.steps = s.at("steps").get<int>();
    c.sampler.init_mode = s.at("init_mode").get<std::string>();
    c.sampler.guidance_scale = s.at("guidance_scale").get<double>();
    c.sampler.freeu = s.at("freeu").get<bool>();
    c.sampler.b1 = s.at("b1").get<double>();
    c.sampler.b2 = s.at("b2").get<double>();
    c.sampler.s1 = s.at("s1").get<double>();
    c.sampler.s2 = s.at("s2").get<double>();
    c.sampler.seed = s.at("seed").get<uint64_t>();
    c.eval.setting = j.at("eval").at("setting").get<std::string>();

    // validation, aggregated
    std::vector<std::string> errs;
    auto positive = [&](double v, const char* name) {
        if (v <= 0.0) errs.push_back(std::string(name) + " must be positive (got " + std::to_string(v) + ")");
    };
    auto non_negative = [&](double v, const char* name) {
        if (v < 0.0) errs.push_back(std::string(name) + " must be non-negative");
    };
    positive(c.warp.lambda_per, "warp.lambda_per");
    positive(c.warp.lambda_sec, "warp.lambda_sec");
    positive(c.warp.lambda_tv, "warp.lambda_tv");
    positive(c.flatten.lambda_per, "flatten.lambda_per");
    positive(c.flatten.lambda_sec, "flatten.lambda_sec");
    positive(c.flatten.lambda_tv, "flatten.lambda_tv");
    positive(c.diffusion.lambda_cons, "diffusion.lambda_cons");
    non_negative(c.autoencoder.kl_weight, "autoencoder.kl_weight");
    non_negative(c.sampler.guidance_scale, "sampler.guidance_scale");
    if (c.data.count < 1) errs.push_back("data.count must be >= 1");
    if (c.data.train_fraction <= 0.0 || c.data.train_fraction >= 1.0)
        errs.push_back("data.train_fraction must be in (0,1)");
    if (c.diffusion.T < 1) errs.push_back("diffusion.T must be >= 1");
    if (c.sampler.steps > c.diffusion.T) errs.push_back("sampler.steps must be <= diffusion.T");
    if (c.sampler.b1 <= 0 || c.sampler.b2 <= 0 || c.sampler.s1 <= 0 || c.sampler.s2 <= 0)
        errs.push_back("sampler freeu factors must be positive");
    if (c.diffusion.cfg_dropout < 0.0 || c.diffusion.cfg_dropout > 1.0)
        errs.push_back("diffusion.cfg_dropout must be in [0,1]");
    if (c.canvas_h * 3 != c.canvas_w * 4) errs.push_back("canvas must have a 4:3 aspect ratio");
    if (!errs.empty()) {
        std::string msg = "config validation failed:";
        for (const std::string& e : errs) msg += "\n  - " + e;
        throw ArgError(msg);
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("load_config: cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ArgError("load_config: JSON parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::string config_fingerprint(const RunConfig& c) {
    json j = config_to_json(c);
    j.erase("output_root");
    j.erase("threads");
    uint64_t h = fnv1a64_str(j.dump());
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace vton::cli

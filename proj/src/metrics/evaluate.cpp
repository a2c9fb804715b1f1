#include "vton/metrics/evaluate.hpp"

#include <fstream>

#include "vton/core/image.hpp"

namespace vton::metrics {

std::string eval_setting_name(EvalSetting s) { return s == EvalSetting::Paired ? "paired" : "unpaired"; }

EvalSetting eval_setting_from_name(const std::string& s) {
    if (s == "paired") return EvalSetting::Paired;
    if (s == "unpaired") return EvalSetting::Unpaired;
    throw ArgError("unknown eval setting: " + s);
}

json EvalReport::to_json() const {
    json rows_j = json::array();
    for (const EvalRow& r : rows) {
        json row;
        row["sample_id"] = r.sample_id;
        if (ssim_v) row["ssim"] = *ssim_v;
        if (masked_l1_v) row["masked_l1"] = *masked_l1_v;
        row["consistency"] = r.consistency;
        rows_j.push_back(row);
    }
    json agg;
    if (mean_ssim) agg["mean_ssim"] = *mean_ssim;
    if (mean_masked_l1) agg["mean_masked_l1"] = *mean_masked_l1;
    if (frechet) agg["frechet_proxy"] = *frechet;
    agg["mean_consistency"] = mean_consistency;
    // metrics replaced at desk scale, labelled per schema
    json notes;
    notes["lpips"] = "not computed: requires pretrained perceptual weights";
    notes["kid"] = "not computed: distribution distance covered by frechet_proxy";
    return json{{"setting", eval_setting_name(setting)},
                {"rows", rows_j},
                {"aggregates", agg},
                {"replaced_metrics", notes},
                {"config_fingerprint", config_fingerprint}};
}

void EvalReport::save(const std::filesystem::path& json_path,
                      const std::filesystem::path& csv_path) const {
    {
        std::ofstream f(json_path);
        if (!f) throw IoError("EvalReport: cannot write " + json_path.string());
        f << to_json().dump(2) << '\n';
    }
    std::ofstream f(csv_path);
    if (!f) throw IoError("EvalReport: cannot write " + csv_path.string());
    if (setting == EvalSetting::Paired) {
        f << "sample_id,ssim,masked_l1,consistency\n";
        for (const EvalRow& r : rows)
            f << r.sample_id << ',' << *r.ssim_v << ',' << *r.masked_l1_v << ',' << r.consistency << '\n';
    } else {
        f << "sample_id,consistency\n";
        for (const EvalRow& r : rows) f << r.sample_id << ',' << r.consistency << '\n';
    }
}

EvalReport evaluate(const synth::Dataset& ds, const EvalContext& ctx, EvalSetting setting,
                    const sampler::SamplerConfig& cfg, const std::string& config_fingerprint) {
    const auto& man = ds.manifest();
    if (man.test_ids.empty()) throw ArgError("evaluate: dataset has no test split");
    if (setting == EvalSetting::Unpaired && man.unpaired.empty())
        throw ArgError("evaluate: dataset has no unpaired listing");

    EvalReport rep;
    rep.setting = setting;
    rep.config_fingerprint = config_fingerprint;
    double sum_ssim = 0, sum_l1 = 0, sum_cons = 0;
    std::vector<std::vector<float>> feats_real, feats_gen;

    auto eval_one = [&](const std::string& person_id, const std::string& garment_id) {
        synth::SamplePair person = ds.load(person_id);
        synth::SamplePair garment = person_id == garment_id ? person : ds.load(garment_id);
        sampler::SamplerConfig scfg = cfg;
        scfg.seed = derive_seed(cfg.seed, "eval", fnv1a64_str(person_id));
        sampler::SampleResult out =
            sampler::sample(sampler::sample_inputs_from(person, garment), ctx.warp, ctx.ae, ctx.model,
                            ctx.sched, scfg);
        EvalRow row;
        row.sample_id = person_id;
        if (setting == EvalSetting::Paired) {
            row.ssim_v = ssim(out.image, person.T);
            row.masked_l1_v = masked_l1(out.image, person.T, person.m_C);
            row.consistency = flat_consistency(out.image, person.m_C, ctx.flatten, garment.C, garment.m_cp);
            sum_ssim += *row.ssim_v;
            sum_l1 += *row.masked_l1_v;
        } else {
            row.consistency =
                flat_consistency(out.image, out.warped_mask, ctx.flatten, garment.C, garment.m_cp);
            feats_real.push_back(pooled_features(ctx.ae, person.T));
            feats_gen.push_back(pooled_features(ctx.ae, out.image));
        }
        sum_cons += row.consistency;
        rep.rows.push_back(std::move(row));
    };

    if (setting == EvalSetting::Paired) {
        for (const std::string& id : man.test_ids) eval_one(id, id);
        rep.mean_ssim = sum_ssim / static_cast<double>(rep.rows.size());
        rep.mean_masked_l1 = sum_l1 / static_cast<double>(rep.rows.size());
    } else {
        for (const auto& [pid, gid] : man.unpaired) eval_one(pid, gid);
        if (feats_real.size() >= 2) rep.frechet = frechet_proxy(feats_real, feats_gen);
    }
    rep.mean_consistency = sum_cons / static_cast<double>(rep.rows.size());
    return rep;
}

InitComparison compare_init_modes(const synth::Dataset& ds, const EvalContext& ctx,
                                  const sampler::SamplerConfig& base_cfg) {
    const auto& man = ds.manifest();
    if (man.unpaired.empty()) throw ArgError("compare_init_modes: no unpaired listing");
    InitComparison cmp;
    int wins = 0;
    for (const auto& [pid, gid] : man.unpaired) {
        synth::SamplePair person = ds.load(pid);
        synth::SamplePair garment = ds.load(gid);
        sampler::SampleInputs in = sampler::sample_inputs_from(person, garment);
        auto run = [&](sampler::InitMode mode) {
            sampler::SamplerConfig c = base_cfg;
            c.init_mode = mode;
            c.seed = derive_seed(base_cfg.seed, "init-cmp", fnv1a64_str(pid));
            return sampler::sample(in, ctx.warp, ctx.ae, ctx.model, ctx.sched, c);
        };
        sampler::SampleResult post = run(sampler::InitMode::ClothesPosterior);
        sampler::SampleResult gaus = run(sampler::InitMode::Gaussian);
        double lp = masked_l1(post.image, post.warped, post.warped_mask);
        double lg = masked_l1(gaus.image, gaus.warped, gaus.warped_mask);
        cmp.sample_ids.push_back(pid);
        cmp.posterior_l1.push_back(lp);
        cmp.gaussian_l1.push_back(lg);
        wins += lp < lg;
    }
    cmp.posterior_win_fraction = static_cast<double>(wins) / static_cast<double>(cmp.sample_ids.size());
    return cmp;
}

}  // namespace vton::metrics

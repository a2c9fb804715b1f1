#include "vton/synth/dataset.hpp"

#include <fstream>

#include "vton/core/image.hpp"
#include "vton/core/tensorio.hpp"

namespace vton::synth {

using nlohmann::json;
namespace fs = std::filesystem;

json DatasetManifest::header_json() const {
    json j;
    j["version"] = version;
    j["seed"] = seed;
    j["count"] = count;
    j["canvas"] = {canvas_h, canvas_w};
    j["train_ids"] = train_ids;
    j["test_ids"] = test_ids;
    json up = json::array();
    for (const auto& [p, g] : unpaired) up.push_back({{"person", p}, {"garment", g}});
    j["unpaired"] = up;
    j["records"] = "manifest.jsonl";
    return j;
}

SamplePair make_sample(const DatasetConfig& cfg, int index) {
    uint64_t s = derive_seed(cfg.seed, "sample", static_cast<uint64_t>(index));
    Rng rng(s);
    GarmentSpec gs = random_garment_spec(cfg.canvas_h, cfg.canvas_w, rng);
    // cycle the pattern kinds so every dataset covers all of them
    gs.pattern_kind = static_cast<PatternKind>(index % 5);
    if (gs.pattern_kind == PatternKind::Stripes && !gs.pattern_params.count("stripe_width"))
        gs.pattern_params["stripe_width"] = rng.uniform_int(2, std::max(2, cfg.canvas_w / 6));
    if (gs.pattern_kind == PatternKind::Checker && !gs.pattern_params.count("cell"))
        gs.pattern_params["cell"] = rng.uniform_int(3, std::max(3, cfg.canvas_w / 6));
    if (gs.pattern_kind == PatternKind::GlyphText && !gs.pattern_params.count("glyphs"))
        gs.pattern_params["glyphs"] = rng.uniform_int(2, 4);
    if (gs.pattern_kind == PatternKind::LogoPatch && !gs.pattern_params.count("patch_x")) {
        gs.pattern_params["patch_x"] = rng.uniform(0.38, 0.62);
        gs.pattern_params["patch_y"] = rng.uniform(0.4, 0.6);
    }
    PersonSpec ps = random_person_spec(cfg.canvas_h, cfg.canvas_w, rng);
    auto [garment, m_cp] = gen_garment(gs, derive_seed(s, "garment"));
    PersonRender person = gen_person(ps);
    TruthWarp warp = gen_truth_warp(ps, derive_seed(s, "warp"), cfg.warp);
    SamplePair sp = compose_sample(garment, m_cp, person, warp, cfg.compose);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", index);
    sp.sample_id = buf;
    return sp;
}

static void write_mask_png(const fs::path& p, const Tensor& m) { png_write(p, m); }

static Tensor read_mask_png(const fs::path& p) {
    Tensor rgb = png_read(p);
    Tensor m({1, rgb.dim(1), rgb.dim(2)});
    for (int y = 0; y < m.dim(1); ++y)
        for (int x = 0; x < m.dim(2); ++x) m.at(0, y, x) = rgb.at(0, y, x) >= 0.5f ? 1.0f : 0.0f;
    return m;
}

DatasetManifest build_dataset(const DatasetConfig& cfg, const fs::path& out_dir) {
    if (cfg.count < 1) throw ArgError("build_dataset: count < 1");
    if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
        throw ArgError("build_dataset: train_fraction must be in (0,1)");
    std::error_code ec;
    fs::create_directories(out_dir / "files", ec);
    if (ec) throw IoError("build_dataset: cannot create " + out_dir.string());

    DatasetManifest man;
    man.version = kDatasetVersion;
    man.seed = cfg.seed;
    man.count = cfg.count;
    man.canvas_h = cfg.canvas_h;
    man.canvas_w = cfg.canvas_w;

    int n_train = static_cast<int>(std::lround(cfg.count * cfg.train_fraction));
    n_train = std::min(std::max(n_train, 1), cfg.count - 1);

    std::ofstream jsonl(out_dir / "manifest.jsonl");
    if (!jsonl) throw IoError("build_dataset: cannot write manifest.jsonl");

    for (int i = 0; i < cfg.count; ++i) {
        SamplePair sp = make_sample(cfg, i);
        const std::string& id = sp.sample_id;
        std::map<std::string, std::string> rec;
        auto img = [&](const char* field, const Tensor& t) {
            std::string rel = "files/" + id + "_" + field + ".png";
            png_write(out_dir / rel, t);
            rec[field] = rel;
        };
        auto msk = [&](const char* field, const Tensor& t) {
            std::string rel = "files/" + id + "_" + field + ".png";
            write_mask_png(out_dir / rel, t);
            rec[field] = rel;
        };
        auto raw = [&](const char* field, const Tensor& t) {
            std::string rel = "files/" + id + "_" + field + ".f32";
            write_tensor(out_dir / rel, t, field);
            rec[field] = rel;
        };
        img("C", sp.C);
        msk("m_cp", sp.m_cp);
        img("P", sp.P);
        img("P_a", sp.P_a);
        msk("m", sp.m);
        msk("m_C", sp.m_C);
        img("T", sp.T);
        img("C_w_gt", sp.C_w_gt);
        raw("F_gt", sp.F_gt);
        raw("F_gt_inv", sp.F_gt_inv);
        raw("pose_map", sp.pose_map);

        json line;
        line["sample_id"] = id;
        for (const auto& [k, v] : rec) line[k] = v;
        jsonl << line.dump() << '\n';
        man.records[id] = std::move(rec);
        (i < n_train ? man.train_ids : man.test_ids).push_back(id);
    }

    // unpaired garments: seeded cyclic shift over the test ids (a derangement)
    size_t nt = man.test_ids.size();
    if (nt >= 2) {
        Rng rng(derive_seed(cfg.seed, "unpaired"));
        size_t shift = 1 + static_cast<size_t>(rng.uniform_int(0, static_cast<int>(nt) - 2));
        for (size_t j = 0; j < nt; ++j)
            man.unpaired.emplace_back(man.test_ids[j], man.test_ids[(j + shift) % nt]);
    }

    std::ofstream hdr(out_dir / "manifest.json");
    if (!hdr) throw IoError("build_dataset: cannot write manifest.json");
    hdr << man.header_json().dump(2) << '\n';
    return man;
}

Dataset Dataset::open(const fs::path& dir) {
    Dataset ds;
    ds.dir_ = dir;
    std::ifstream hdr(dir / "manifest.json");
    if (!hdr) throw DependencyError("dataset manifest not found in " + dir.string() + " (run gen-data)");
    json j;
    hdr >> j;
    ds.manifest_.version = j.at("version").get<std::string>();
    ds.manifest_.seed = j.at("seed").get<uint64_t>();
    ds.manifest_.count = j.at("count").get<int>();
    ds.manifest_.canvas_h = j.at("canvas")[0].get<int>();
    ds.manifest_.canvas_w = j.at("canvas")[1].get<int>();
    ds.manifest_.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    ds.manifest_.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    for (const auto& u : j.at("unpaired"))
        ds.manifest_.unpaired.emplace_back(u.at("person").get<std::string>(),
                                           u.at("garment").get<std::string>());
    std::ifstream jsonl(dir / j.at("records").get<std::string>());
    if (!jsonl) throw DependencyError("dataset records not found in " + dir.string());
    std::string line;
    while (std::getline(jsonl, line)) {
        if (line.empty()) continue;
        json rec = json::parse(line);
        std::string id = rec.at("sample_id").get<std::string>();
        std::map<std::string, std::string> paths;
        for (auto& [k, v] : rec.items())
            if (k != "sample_id") paths[k] = v.get<std::string>();
        ds.manifest_.records[id] = std::move(paths);
    }
    return ds;
}

SamplePair Dataset::load(const std::string& sample_id) const {
    auto it = manifest_.records.find(sample_id);
    if (it == manifest_.records.end()) throw ArgError("Dataset: unknown sample_id " + sample_id);
    const auto& rec = it->second;
    SamplePair sp;
    sp.sample_id = sample_id;
    auto path = [&](const char* f) { return dir_ / rec.at(f); };
    sp.C = png_read(path("C"));
    sp.m_cp = read_mask_png(path("m_cp"));
    sp.P = png_read(path("P"));
    sp.P_a = png_read(path("P_a"));
    sp.m = read_mask_png(path("m"));
    sp.m_C = read_mask_png(path("m_C"));
    sp.T = png_read(path("T"));
    sp.C_w_gt = png_read(path("C_w_gt"));
    sp.F_gt = read_tensor(path("F_gt"));
    sp.F_gt_inv = read_tensor(path("F_gt_inv"));
    sp.pose_map = read_tensor(path("pose_map"));
    return sp;
}

}  // namespace vton::synth

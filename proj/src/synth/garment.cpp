#include "vton/synth/garment.hpp"

#include <cmath>

#include "vton/core/errors.hpp"

namespace vton::synth {

std::string pattern_kind_name(PatternKind k) {
    switch (k) {
        case PatternKind::Solid: return "solid";
        case PatternKind::Stripes: return "stripes";
        case PatternKind::Checker: return "checker";
        case PatternKind::GlyphText: return "glyph-text";
        case PatternKind::LogoPatch: return "logo-patch";
    }
    throw ArgError("pattern_kind_name: bad kind");
}

PatternKind pattern_kind_from_name(const std::string& s) {
    if (s == "solid") return PatternKind::Solid;
    if (s == "stripes") return PatternKind::Stripes;
    if (s == "checker") return PatternKind::Checker;
    if (s == "glyph-text") return PatternKind::GlyphText;
    if (s == "logo-patch") return PatternKind::LogoPatch;
    throw ArgError("unknown pattern kind: " + s);
}

void GarmentSpec::validate() const {
    if (canvas_h * 3 != canvas_w * 4) throw ArgError("GarmentSpec: canvas must be 4:3");
    for (float c : base_color)
        if (c < 0.0f || c > 1.0f) throw ArgError("GarmentSpec: base_color outside [0,1]");
    auto need_in = [&](const std::string& key, double lo, double hi) {
        auto it = pattern_params.find(key);
        if (it == pattern_params.end()) throw ArgError("GarmentSpec: missing pattern_params." + key);
        if (it->second < lo || it->second > hi)
            throw ArgError("GarmentSpec: pattern_params." + key + " outside [" + std::to_string(lo) + "," +
                           std::to_string(hi) + "]");
    };
    switch (pattern_kind) {
        case PatternKind::Solid: break;
        case PatternKind::Stripes: need_in("stripe_width", 1.0, canvas_w); break;
        case PatternKind::Checker: need_in("cell", 1.0, canvas_w); break;
        case PatternKind::GlyphText: need_in("glyphs", 1.0, 6.0); break;
        case PatternKind::LogoPatch:
            need_in("patch_x", 0.3, 0.7);
            need_in("patch_y", 0.35, 0.7);
            break;
    }
}

bool inside_garment_template(double u, double v) {
    bool torso = u >= 0.25 && u < 0.75 && v >= 0.28 && v < 0.80;
    bool sleeve_l = u >= 0.13 && u < 0.25 && v >= 0.28 && v < 0.48;
    bool sleeve_r = u >= 0.75 && u < 0.87 && v >= 0.28 && v < 0.48;
    bool neck = u >= 0.42 && u < 0.58 && v >= 0.28 && v < 0.34;
    return (torso || sleeve_l || sleeve_r) && !neck;
}

// 5x7 block glyphs, row-major bits (LSB = left column)
namespace {
struct Glyph {
    char ch;
    uint8_t rows[7];
};
constexpr Glyph kFont[] = {
    {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
    {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
    {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
};
constexpr int kFontSize = static_cast<int>(sizeof(kFont) / sizeof(kFont[0]));
}  // namespace

std::pair<Tensor, Tensor> gen_garment(const GarmentSpec& spec, uint64_t seed) {
    spec.validate();
    int H = spec.canvas_h, W = spec.canvas_w;
    Tensor img({3, H, W});
    Tensor mask({1, H, W});
    std::array<float, 3> alt = {1.0f - spec.base_color[0], 1.0f - spec.base_color[1],
                                1.0f - spec.base_color[2]};

    Rng rng(derive_seed(seed, "garment"));
    // glyph selection is the only stochastic part
    int n_glyphs = 0;
    std::vector<int> glyph_ids;
    if (spec.pattern_kind == PatternKind::GlyphText) {
        n_glyphs = static_cast<int>(spec.pattern_params.at("glyphs"));
        for (int i = 0; i < n_glyphs; ++i) glyph_ids.push_back(rng.uniform_int(0, kFontSize - 1));
    }

    auto pattern_color = [&](int x, int y) -> std::array<float, 3> {
        switch (spec.pattern_kind) {
            case PatternKind::Solid: return spec.base_color;
            case PatternKind::Stripes: {
                int sw = static_cast<int>(spec.pattern_params.at("stripe_width"));
                return (x / sw) % 2 == 0 ? spec.base_color : alt;
            }
            case PatternKind::Checker: {
                int cell = static_cast<int>(spec.pattern_params.at("cell"));
                return ((x / cell) + (y / cell)) % 2 == 0 ? spec.base_color : alt;
            }
            case PatternKind::GlyphText: {
                int gw = 6;  // 5 px + 1 spacing
                int row_w = n_glyphs * gw - 1;
                int x0 = (W - row_w) / 2;
                int y0 = static_cast<int>(0.45 * H);
                if (y >= y0 && y < y0 + 7 && x >= x0 && x < x0 + row_w) {
                    int gi = (x - x0) / gw;
                    int gx = (x - x0) % gw;
                    if (gi < n_glyphs && gx < 5) {
                        const Glyph& gl = kFont[glyph_ids[static_cast<size_t>(gi)]];
                        if (gl.rows[y - y0] & (1 << (4 - gx))) return alt;
                    }
                }
                return spec.base_color;
            }
            case PatternKind::LogoPatch: {
                int px = static_cast<int>(spec.pattern_params.at("patch_x") * W);
                int py = static_cast<int>(spec.pattern_params.at("patch_y") * H);
                int pw = W / 5, ph = H / 8;
                if (x >= px - pw / 2 && x < px + pw / 2 && y >= py - ph / 2 && y < py + ph / 2) {
                    double du = std::abs(x - px) / (pw / 2.0);
                    double dv = std::abs(y - py) / (ph / 2.0);
                    return du + dv < 0.8 ? spec.base_color : alt;
                }
                return spec.base_color;
            }
        }
        return spec.base_color;
    };

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double u = (x + 0.5) / W, v = (y + 0.5) / H;
            if (!inside_garment_template(u, v)) continue;
            mask.at(0, y, x) = 1.0f;
            auto col = pattern_color(x, y);
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = col[static_cast<size_t>(c)];
        }
    }
    return {std::move(img), std::move(mask)};
}

GarmentSpec random_garment_spec(int canvas_h, int canvas_w, Rng& rng) {
    GarmentSpec s;
    s.canvas_h = canvas_h;
    s.canvas_w = canvas_w;
    int k = rng.uniform_int(0, 4);
    s.pattern_kind = static_cast<PatternKind>(k);
    for (int c = 0; c < 3; ++c) s.base_color[static_cast<size_t>(c)] = static_cast<float>(rng.uniform(0.15, 0.9));
    switch (s.pattern_kind) {
        case PatternKind::Solid: break;
        case PatternKind::Stripes:
            s.pattern_params["stripe_width"] = rng.uniform_int(2, std::max(2, canvas_w / 6));
            break;
        case PatternKind::Checker:
            s.pattern_params["cell"] = rng.uniform_int(3, std::max(3, canvas_w / 6));
            break;
        case PatternKind::GlyphText: s.pattern_params["glyphs"] = rng.uniform_int(2, 4); break;
        case PatternKind::LogoPatch:
            s.pattern_params["patch_x"] = rng.uniform(0.38, 0.62);
            s.pattern_params["patch_y"] = rng.uniform(0.4, 0.6);
            break;
    }
    return s;
}

}  // namespace vton::synth

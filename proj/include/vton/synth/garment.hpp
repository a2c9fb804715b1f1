#pragma once

#include <array>
#include <map>
#include <string>

#include "vton/core/rng.hpp"
#include "vton/core/tensor.hpp"

namespace vton::synth {

enum class PatternKind { Solid, Stripes, Checker, GlyphText, LogoPatch };

std::string pattern_kind_name(PatternKind k);
PatternKind pattern_kind_from_name(const std::string& s);

struct GarmentSpec {
    PatternKind pattern_kind = PatternKind::Solid;
    std::array<float, 3> base_color = {0.5f, 0.2f, 0.2f};
    std::map<std::string, double> pattern_params;
    int canvas_h = 64;
    int canvas_w = 48;

    void validate() const;  // 4:3 ratio, colors in [0,1], params in range
};

// Analytic t-shirt template in normalized (u,v) coordinates; the same test is
// the ground truth for mask coverage.
bool inside_garment_template(double u, double v);

// flat garment image (black outside the template) and its position mask
std::pair<Tensor, Tensor> gen_garment(const GarmentSpec& spec, uint64_t seed);

GarmentSpec random_garment_spec(int canvas_h, int canvas_w, Rng& rng);

}  // namespace vton::synth

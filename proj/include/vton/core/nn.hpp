#pragma once

#include <string>

#include "vton/core/checkpoint.hpp"
#include "vton/core/ops.hpp"

namespace vton {

// Binds named parameters of one store into a graph, trainable or frozen.
struct NetCtx {
    Graph& g;
    const ParamStore& p;
    bool trainable = false;

    Var t(const std::string& name) const { return trainable ? g.param(&p.at(name)) : g.frozen(&p.at(name)); }
};

// parameter registration
void add_conv(ParamStore& p, const std::string& name, int cout, int cin, int k, Rng& rng,
              bool zero_init = false);
void add_linear(ParamStore& p, const std::string& name, int din, int dout, Rng& rng,
                bool zero_init = false);
void add_group_norm(ParamStore& p, const std::string& name, int c);

// graph application
Var conv(const NetCtx& ctx, Var x, const std::string& name, int stride, int pad);
Var linear(const NetCtx& ctx, Var x, const std::string& name);  // x{M,Din}
Var group_norm(const NetCtx& ctx, Var x, const std::string& name, int groups);

}  // namespace vton

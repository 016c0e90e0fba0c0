#include "cvgeo/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cvgeo/errors.hpp"

namespace cvgeo {

namespace {

void size_blocks(ModelParams& p) {
    const auto& d = p.dims;
    auto locs_s = static_cast<std::size_t>(d.h_s) * d.w_s;
    auto locs_a = static_cast<std::size_t>(d.h_a) * d.h_a;
    p.w1_street.assign(locs_s * d.c1 * d.c, 0.0);
    p.b1_street.assign(locs_s * d.c1, 0.0);
    p.w1_aerial.assign(locs_a * d.c1 * d.c, 0.0);
    p.b1_aerial.assign(locs_a * d.c1, 0.0);
    p.w2.assign(static_cast<std::size_t>(d.k) * d.c1, 0.0);
    p.b2.assign(d.k, 0.0);
}

struct StreamRef {
    const Vec& w1;
    const Vec& b1;
    int h;
    int w;
};

StreamRef stream_of(const ModelParams& p, View view) {
    if (view == View::street)
        return {p.w1_street, p.b1_street, p.dims.h_s, p.dims.w_s};
    return {p.w1_aerial, p.b1_aerial, p.dims.h_a, p.dims.h_a};
}

ForwardTrace forward_impl(const ModelParams& params, View view,
                          const Tensor3& t, bool require_unit) {
    const auto& d = params.dims;
    StreamRef s = stream_of(params, view);
    if (t.c != d.c || t.h != s.h || t.w != s.w)
        throw ShapeError("forward: input shape does not match model dims");

    ForwardTrace tr;
    tr.view = view;
    tr.input = t;
    tr.stage1_pre = Tensor3(s.h, s.w, d.c1);
    tr.stage1_post = Tensor3(s.h, s.w, d.c1);
    tr.pooled.assign(d.c1, 0.0);

    const std::size_t locs = static_cast<std::size_t>(s.h) * s.w;
    for (std::size_t loc = 0; loc < locs; ++loc) {
        const double* x = &t.data[loc * d.c];
        for (int c1 = 0; c1 < d.c1; ++c1) {
            const double* w = &s.w1[(loc * d.c1 + c1) * d.c];
            double acc = s.b1[loc * d.c1 + c1];
            for (int ch = 0; ch < d.c; ++ch) acc += w[ch] * x[ch];
            tr.stage1_pre.data[loc * d.c1 + c1] = acc;
            double post = acc > 0.0 ? acc : 0.0;
            tr.stage1_post.data[loc * d.c1 + c1] = post;
            tr.pooled[c1] += post;
        }
    }
    double inv = 1.0 / static_cast<double>(locs);
    for (auto& v : tr.pooled) v *= inv;

    tr.pre_norm.assign(d.k, 0.0);
    for (int k = 0; k < d.k; ++k) {
        double acc = params.b2[k];
        const double* w = &params.w2[static_cast<std::size_t>(k) * d.c1];
        for (int c1 = 0; c1 < d.c1; ++c1) acc += w[c1] * tr.pooled[c1];
        tr.pre_norm[k] = acc;
    }

    double n = norm(tr.pre_norm);
    if (n > 0.0) {
        tr.embedding.assign(d.k, 0.0);
        for (int k = 0; k < d.k; ++k) tr.embedding[k] = tr.pre_norm[k] / n;
    } else if (require_unit) {
        throw EmbeddingDegenerateError("forward: all-zero pre-norm embedding");
    }
    return tr;
}

}  // namespace

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
    if (dims.h_s <= 0 || dims.w_s <= 0 || dims.h_a <= 0 || dims.c <= 0 ||
        dims.c1 <= 0 || dims.k <= 0)
        throw ShapeError("init_params: dims must be positive");
    ModelParams p;
    p.dims = dims;
    size_blocks(p);
    Rng rng(seed);
    double std1 = std::sqrt(2.0 / dims.c);   // stage-1 fan-in is C
    double std2 = std::sqrt(2.0 / dims.c1);  // stage-2 fan-in is C1
    for (auto& v : p.w1_street) v = rng.normal() * std1;
    for (auto& v : p.w1_aerial) v = rng.normal() * std1;
    for (auto& v : p.w2) v = rng.normal() * std2;
    return p;
}

ParamGrads zero_grads(const ModelDims& dims) {
    ParamGrads g;
    g.dims = dims;
    size_blocks(g);
    return g;
}

ForwardTrace forward(const ModelParams& params, View view, const Tensor3& t) {
    return forward_impl(params, view, t, true);
}

ForwardTrace forward_unnormalized(const ModelParams& params, View view,
                                  const Tensor3& t) {
    return forward_impl(params, view, t, false);
}

void backward_accumulate(const ModelParams& params, const ForwardTrace& trace,
                         const Vec& grad_embedding, ParamGrads& acc) {
    const auto& d = params.dims;
    if (acc.dims != d) throw TraceError("backward: grads dims mismatch");
    StreamRef s = stream_of(params, trace.view);
    if (trace.input.c != d.c || trace.input.h != s.h || trace.input.w != s.w ||
        static_cast<int>(trace.pooled.size()) != d.c1 ||
        static_cast<int>(trace.pre_norm.size()) != d.k)
        throw TraceError("backward: trace does not match model dims");
    if (grad_embedding.size() != static_cast<std::size_t>(d.k))
        throw ShapeError("backward: grad_embedding dim mismatch");
    if (trace.embedding.empty())
        throw TraceError("backward: degenerate trace has no embedding");

    // through L2 normalization: (I - e e^T) / ||pre_norm||
    double n = norm(trace.pre_norm);
    double eg = dot(trace.embedding, grad_embedding);
    Vec g_pre(d.k);
    for (int k = 0; k < d.k; ++k)
        g_pre[k] = (grad_embedding[k] - trace.embedding[k] * eg) / n;

    Vec& gw2 = acc.w2;
    Vec& gb2 = acc.b2;
    Vec g_pooled(d.c1, 0.0);
    for (int k = 0; k < d.k; ++k) {
        gb2[k] += g_pre[k];
        const double* w = &params.w2[static_cast<std::size_t>(k) * d.c1];
        double* gw = &gw2[static_cast<std::size_t>(k) * d.c1];
        for (int c1 = 0; c1 < d.c1; ++c1) {
            gw[c1] += g_pre[k] * trace.pooled[c1];
            g_pooled[c1] += w[c1] * g_pre[k];
        }
    }

    Vec& gw1 = trace.view == View::street ? acc.w1_street : acc.w1_aerial;
    Vec& gb1 = trace.view == View::street ? acc.b1_street : acc.b1_aerial;
    const std::size_t locs = static_cast<std::size_t>(s.h) * s.w;
    double inv = 1.0 / static_cast<double>(locs);
    for (std::size_t loc = 0; loc < locs; ++loc) {
        const double* x = &trace.input.data[loc * d.c];
        for (int c1 = 0; c1 < d.c1; ++c1) {
            if (trace.stage1_pre.data[loc * d.c1 + c1] <= 0.0) continue;
            double gp = g_pooled[c1] * inv;
            gb1[loc * d.c1 + c1] += gp;
            double* gw = &gw1[(loc * d.c1 + c1) * d.c];
            for (int ch = 0; ch < d.c; ++ch) gw[ch] += gp * x[ch];
        }
    }
}

BackwardResult backward(const ModelParams& params, const ForwardTrace& trace,
                        const Vec& grad_embedding) {
    BackwardResult res{zero_grads(params.dims), Tensor3()};
    backward_accumulate(params, trace, grad_embedding, res.grads);

    // grad w.r.t. the input tensor
    const auto& d = params.dims;
    StreamRef s = stream_of(params, trace.view);
    res.grad_input = Tensor3(s.h, s.w, d.c);

    double n = norm(trace.pre_norm);
    double eg = dot(trace.embedding, grad_embedding);
    Vec g_pre(d.k);
    for (int k = 0; k < d.k; ++k)
        g_pre[k] = (grad_embedding[k] - trace.embedding[k] * eg) / n;
    Vec g_pooled(d.c1, 0.0);
    for (int k = 0; k < d.k; ++k) {
        const double* w = &params.w2[static_cast<std::size_t>(k) * d.c1];
        for (int c1 = 0; c1 < d.c1; ++c1) g_pooled[c1] += w[c1] * g_pre[k];
    }
    const std::size_t locs = static_cast<std::size_t>(s.h) * s.w;
    double inv = 1.0 / static_cast<double>(locs);
    for (std::size_t loc = 0; loc < locs; ++loc) {
        double* gx = &res.grad_input.data[loc * d.c];
        for (int c1 = 0; c1 < d.c1; ++c1) {
            if (trace.stage1_pre.data[loc * d.c1 + c1] <= 0.0) continue;
            double gp = g_pooled[c1] * inv;
            const double* w = &s.w1[(loc * d.c1 + c1) * d.c];
            for (int ch = 0; ch < d.c; ++ch) gx[ch] += gp * w[ch];
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kCkptMagic[4] = {'C', 'V', 'C', 'K'};
}

void save_checkpoint(const std::string& path, const ModelParams& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("save_checkpoint: cannot open " + path, 0);
    f.write(kCkptMagic, 4);
    char version = 1;
    f.write(&version, 1);
    std::uint32_t dims[6] = {
        static_cast<std::uint32_t>(params.dims.h_s),
        static_cast<std::uint32_t>(params.dims.w_s),
        static_cast<std::uint32_t>(params.dims.h_a),
        static_cast<std::uint32_t>(params.dims.c),
        static_cast<std::uint32_t>(params.dims.c1),
        static_cast<std::uint32_t>(params.dims.k)};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    params.for_each_block([&](const char*, const Vec& block) {
        f.write(reinterpret_cast<const char*>(block.data()),
                static_cast<std::streamsize>(block.size() * sizeof(double)));
    });
    if (!f) throw FormatError("save_checkpoint: short write to " + path, 0);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("load_checkpoint: cannot open " + path, 0);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw FormatError("load_checkpoint: bad magic", 0);
    char version;
    f.read(&version, 1);
    if (!f || version != 1)
        throw FormatError("load_checkpoint: unsupported version", 4);
    std::uint32_t dims[6];
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!f) throw FormatError("load_checkpoint: truncated header", 5);
    ModelParams p;
    p.dims = {static_cast<int>(dims[0]), static_cast<int>(dims[1]),
              static_cast<int>(dims[2]), static_cast<int>(dims[3]),
              static_cast<int>(dims[4]), static_cast<int>(dims[5])};
    if (p.dims.h_s <= 0 || p.dims.w_s <= 0 || p.dims.h_a <= 0 ||
        p.dims.c <= 0 || p.dims.c1 <= 0 || p.dims.k <= 0)
        throw FormatError("load_checkpoint: invalid dims", 5);
    size_blocks(p);
    std::size_t offset = 5 + sizeof(dims);
    bool ok = true;
    p.for_each_block([&](const char*, Vec& block) {
        f.read(reinterpret_cast<char*>(block.data()),
               static_cast<std::streamsize>(block.size() * sizeof(double)));
        if (!f) ok = false;
        offset += block.size() * sizeof(double);
    });
    if (!ok) throw FormatError("load_checkpoint: truncated payload", offset);
    f.peek();
    if (!f.eof())
        throw FormatError("load_checkpoint: trailing bytes", offset);
    return p;
}

}  // namespace cvgeo

#ifndef CVGEO_MODEL_HPP
#define CVGEO_MODEL_HPP

#include <string>

#include "cvgeo/rng.hpp"
#include "cvgeo/tensor.hpp"

namespace cvgeo {

enum class View { street, aerial };

struct ModelDims {
    int h_s = 8;   // street grid
    int w_s = 16;
    int h_a = 16;  // aerial grid (square)
    int c = 8;     // input channels
    int c1 = 32;   // stage-1 channels
    int k = 64;    // embedding dimension

    bool operator==(const ModelDims&) const = default;
};

// Two-stream embedding model. Stage 1 is a locally connected affine C -> C1
// (distinct weights at every spatial location, unshared between streams),
// followed by ReLU and spatial average pooling. Stage 2 is a shared affine
// C1 -> K followed by L2 normalization. Location-specific stage-1 weights are
// what lets the model exploit (or learn to ignore) spatial alignment; a
// weight-shared stem would make the pooled embedding blind to rotation.
struct ModelParams {
    ModelDims dims;
    // W1 blocks are laid out [location][c1][c], b1 blocks [location][c1],
    // location index row-major. W2 is [k][c1].
    Vec w1_street, b1_street;
    Vec w1_aerial, b1_aerial;
    Vec w2, b2;

    // Applies f to each (name, block) pair in checkpoint order.
    template <typename F>
    void for_each_block(F&& f) {
        f("w1_street", w1_street);
        f("b1_street", b1_street);
        f("w1_aerial", w1_aerial);
        f("b1_aerial", b1_aerial);
        f("w2", w2);
        f("b2", b2);
    }
    template <typename F>
    void for_each_block(F&& f) const {
        f("w1_street", w1_street);
        f("b1_street", b1_street);
        f("w1_aerial", w1_aerial);
        f("b1_aerial", b1_aerial);
        f("w2", w2);
        f("b2", b2);
    }
};

using ParamGrads = ModelParams;

struct ForwardTrace {
    View view = View::street;
    Tensor3 input;
    Tensor3 stage1_pre;   // H x W x C1
    Tensor3 stage1_post;  // ReLU of stage1_pre
    Vec pooled;           // C1
    Vec pre_norm;         // K
    Vec embedding;        // K, unit norm (empty when degenerate was allowed)
};

// He-style init: weights ~ N(0, 2/fan_in), biases zero.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);
ParamGrads zero_grads(const ModelDims& dims);

// Throws EmbeddingDegenerateError when pre_norm is exactly zero.
ForwardTrace forward(const ModelParams& params, View view, const Tensor3& t);

// Same pass but a zero pre_norm leaves the embedding empty instead of
// throwing; used by the explainer, which works on un-normalized features.
ForwardTrace forward_unnormalized(const ModelParams& params, View view,
                                  const Tensor3& t);

struct BackwardResult {
    ParamGrads grads;
    Tensor3 grad_input;
};

BackwardResult backward(const ModelParams& params, const ForwardTrace& trace,
                        const Vec& grad_embedding);

// Accumulating form used by the trainer (adds into acc, no grad_input).
void backward_accumulate(const ModelParams& params, const ForwardTrace& trace,
                         const Vec& grad_embedding, ParamGrads& acc);

// Checkpoint container: magic "CVCK", version 1, u32 dims
// (h_s, w_s, h_a, c, c1, k), then the parameter blocks in for_each_block
// order as f64 little endian. load(save(p)) is bit-exact.
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace cvgeo

#endif

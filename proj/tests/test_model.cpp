#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cvgeo/model.hpp"

using namespace cvgeo;
namespace fs = std::filesystem;

namespace {

ModelDims tiny_dims() {
    ModelDims d;
    d.h_s = 2;
    d.w_s = 3;
    d.h_a = 3;
    d.c = 2;
    d.c1 = 4;
    d.k = 5;
    return d;
}

Tensor3 random_input(const ModelDims& d, View view, Rng& rng) {
    Tensor3 t(view == View::street ? d.h_s : d.h_a,
              view == View::street ? d.w_s : d.h_a, d.c);
    for (auto& v : t.data) v = rng.normal();
    return t;
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

// scalar objective used for finite-difference checks: a fixed linear
// functional of the unit embedding
double probe(const ModelParams& p, View view, const Tensor3& t, const Vec& w) {
    ForwardTrace tr = forward(p, view, t);
    return dot(tr.embedding, w);
}

}  // namespace

TEST_CASE("forward produces unit embeddings") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 1);
    Rng rng(2);
    for (View view : {View::street, View::aerial}) {
        Tensor3 t = random_input(d, view, rng);
        ForwardTrace tr = forward(p, view, t);
        CHECK(std::abs(norm(tr.embedding) - 1.0) < 1e-12);
        CHECK(static_cast<int>(tr.pooled.size()) == d.c1);
        CHECK(static_cast<int>(tr.embedding.size()) == d.k);
    }
}

TEST_CASE("forward rejects wrong input shapes") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 1);
    Tensor3 wrong(d.h_s, d.w_s, d.c + 1);
    CHECK_THROWS_AS(forward(p, View::street, wrong), ShapeError);
    Tensor3 wrong2(d.h_a + 1, d.h_a, d.c);
    CHECK_THROWS_AS(forward(p, View::aerial, wrong2), ShapeError);
}

TEST_CASE("streams use independent stage-1 weights") {
    ModelDims d = tiny_dims();
    d.h_s = d.h_a = 3;
    d.w_s = 3;
    ModelParams p = init_params(d, 3);
    Rng rng(4);
    Tensor3 t(3, 3, d.c);
    for (auto& v : t.data) v = rng.normal();
    ForwardTrace s = forward(p, View::street, t);
    ForwardTrace a = forward(p, View::aerial, t);
    double diff = 0.0;
    for (int i = 0; i < d.k; ++i) diff += std::abs(s.embedding[i] - a.embedding[i]);
    CHECK(diff > 1e-3);
}

TEST_CASE("zero pre-norm throws, unnormalized variant does not") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 1);
    // zero all weights and biases: stage-1 output is 0, pre_norm is 0
    p.for_each_block([](const char*, Vec& b) { std::fill(b.begin(), b.end(), 0.0); });
    Tensor3 t(d.h_s, d.w_s, d.c);
    CHECK_THROWS_AS(forward(p, View::street, t), EmbeddingDegenerateError);
    ForwardTrace tr = forward_unnormalized(p, View::street, t);
    CHECK(tr.embedding.empty());
    CHECK(static_cast<int>(tr.pre_norm.size()) == d.k);
}

TEST_CASE("parameter gradients match central differences") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 11);
    Rng rng(12);
    for (View view : {View::street, View::aerial}) {
        Tensor3 t = random_input(d, view, rng);
        Vec w(d.k);
        for (auto& v : w) v = rng.normal();

        ForwardTrace tr = forward(p, view, t);
        // d probe / d embedding = w
        BackwardResult br = backward(p, tr, w);

        const double eps = 1e-6;
        ModelParams pert = p;
        int checked = 0;
        pert.for_each_block([&](const char* name, Vec& block) {
            Vec* gblock = nullptr;
            br.grads.for_each_block([&](const char* gname, Vec& g) {
                if (std::strcmp(gname, name) == 0) gblock = &g;
            });
            REQUIRE(gblock != nullptr);
            // spot-check a spread of coordinates in every block
            std::size_t stride = std::max<std::size_t>(1, block.size() / 7);
            for (std::size_t i = 0; i < block.size(); i += stride) {
                double orig = block[i];
                block[i] = orig + eps;
                double up = probe(pert, view, t, w);
                block[i] = orig - eps;
                double dn = probe(pert, view, t, w);
                block[i] = orig;
                double fd = (up - dn) / (2 * eps);
                CHECK(rel_err((*gblock)[i], fd) < 1e-4);
                ++checked;
            }
        });
        CHECK(checked > 20);
    }
}

TEST_CASE("unused stream has zero gradients") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 21);
    Rng rng(22);
    Tensor3 t = random_input(d, View::street, rng);
    Vec w(d.k, 0.5);
    ForwardTrace tr = forward(p, View::street, t);
    BackwardResult br = backward(p, tr, w);
    for (double v : br.grads.w1_aerial) CHECK(v == 0.0);
    for (double v : br.grads.b1_aerial) CHECK(v == 0.0);
    double sum = 0.0;
    for (double v : br.grads.w1_street) sum += std::abs(v);
    CHECK(sum > 0.0);
}

TEST_CASE("input gradients match central differences") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 31);
    Rng rng(32);
    Tensor3 t = random_input(d, View::aerial, rng);
    Vec w(d.k);
    for (auto& v : w) v = rng.normal();

    ForwardTrace tr = forward(p, View::aerial, t);
    BackwardResult br = backward(p, tr, w);
    const double eps = 1e-6;
    for (std::size_t i = 0; i < t.data.size(); i += 3) {
        double orig = t.data[i];
        t.data[i] = orig + eps;
        double up = probe(p, View::aerial, t, w);
        t.data[i] = orig - eps;
        double dn = probe(p, View::aerial, t, w);
        t.data[i] = orig;
        double fd = (up - dn) / (2 * eps);
        CHECK(rel_err(br.grad_input.data[i], fd) < 1e-4);
    }
}

TEST_CASE("backward_accumulate adds into the accumulator") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 41);
    Rng rng(42);
    Tensor3 t = random_input(d, View::street, rng);
    Vec w(d.k, 1.0);
    ForwardTrace tr = forward(p, View::street, t);
    BackwardResult once = backward(p, tr, w);
    ParamGrads acc = zero_grads(d);
    backward_accumulate(p, tr, w, acc);
    backward_accumulate(p, tr, w, acc);
    for (std::size_t i = 0; i < acc.w2.size(); ++i)
        CHECK(acc.w2[i] == doctest::Approx(2 * once.grads.w2[i]).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip is bit exact") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 51);
    fs::path path = fs::temp_directory_path() / "cvgeo_ckpt_test.cvck";
    save_checkpoint(path.string(), p);
    ModelParams q = load_checkpoint(path.string());
    CHECK(q.dims == p.dims);
    bool equal = true;
    p.for_each_block([&](const char* name, const Vec& block) {
        q.for_each_block([&](const char* qname, const Vec& qblock) {
            if (std::strcmp(name, qname) == 0 &&
                std::memcmp(block.data(), qblock.data(),
                            block.size() * sizeof(double)) != 0)
                equal = false;
        });
    });
    CHECK(equal);
    fs::remove(path);
}

TEST_CASE("checkpoint loader rejects corruption") {
    ModelDims d = tiny_dims();
    ModelParams p = init_params(d, 61);
    fs::path path = fs::temp_directory_path() / "cvgeo_ckpt_bad.cvck";
    save_checkpoint(path.string(), p);

    // flip the magic
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);

    // truncate mid-payload
    save_checkpoint(path.string(), p);
    fs::resize_file(path, fs::file_size(path) - 9);
    CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
    fs::remove(path);
}

TEST_CASE("init_params is seed deterministic") {
    ModelDims d = tiny_dims();
    ModelParams a = init_params(d, 7);
    ModelParams b = init_params(d, 7);
    ModelParams c = init_params(d, 8);
    CHECK(a.w2 == b.w2);
    CHECK(a.w1_street == b.w1_street);
    CHECK(a.w2 != c.w2);
}

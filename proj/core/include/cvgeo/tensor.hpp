#ifndef CVGEO_TENSOR_HPP
#define CVGEO_TENSOR_HPP

#include <cstddef>
#include <vector>

#include "cvgeo/errors.hpp"

namespace cvgeo {

using Vec = std::vector<double>;

// Dense H x W x C tensor, row-major with channel fastest.
struct Tensor3 {
    int h = 0;
    int w = 0;
    int c = 0;
    Vec data;

    Tensor3() = default;
    Tensor3(int height, int width, int channels)
        : h(height), w(width), c(channels) {
        if (h <= 0 || w <= 0 || c <= 0)
            throw ShapeError("Tensor3 dims must be positive");
        data.assign(static_cast<std::size_t>(h) * w * c, 0.0);
    }

    double& at(int i, int j, int k) {
        return data[(static_cast<std::size_t>(i) * w + j) * c + k];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<std::size_t>(i) * w + j) * c + k];
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Tensor3& o) const {
        return h == o.h && w == o.w && c == o.c;
    }
};

double dot(const Vec& a, const Vec& b);
double norm(const Vec& v);

// Direction-preserving scale to unit Euclidean norm. Zero vectors are an
// error, never silently epsilon-normalized.
Vec l2_normalize(const Vec& v);

double cosine_similarity(const Vec& a, const Vec& b);

inline bool is_unit(const Vec& v, double tol = 1e-6) {
    double n = norm(v);
    return n > 1.0 - tol && n < 1.0 + tol;
}

}  // namespace cvgeo

#endif

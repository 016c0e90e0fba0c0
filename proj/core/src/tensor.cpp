#include "cvgeo/tensor.hpp"

#include <cmath>

namespace cvgeo {

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw ShapeError("dot: dim mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec l2_normalize(const Vec& v) {
    double n = norm(v);
    if (!(n > 0.0))
        throw NormalizationError("l2_normalize: zero-norm input");
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return out;
}

double cosine_similarity(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw ShapeError("cosine_similarity: dim mismatch");
    double na = norm(a);
    double nb = norm(b);
    if (!(na > 0.0) || !(nb > 0.0))
        throw NormalizationError("cosine_similarity: zero vector");
    double s = dot(a, b) / (na * nb);
    if (s > 1.0) s = 1.0;
    if (s < -1.0) s = -1.0;
    return s;
}

}  // namespace cvgeo

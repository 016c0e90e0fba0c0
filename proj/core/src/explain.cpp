#include "cvgeo/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cvgeo/data.hpp"
#include "cvgeo/errors.hpp"

namespace cvgeo {

MatchingScore matching_score(const ModelParams& params, const Tensor3& street,
                             const Tensor3& aerial) {
    MatchingScore ms;
    ms.street = forward_unnormalized(params, View::street, street);
    ms.aerial = forward_unnormalized(params, View::aerial, aerial);
    ms.score = dot(ms.street.pre_norm, ms.aerial.pre_norm);
    return ms;
}

ActivationMap grad_cam(const ModelParams& params, const MatchingScore& traces,
                       View target_view) {
    const auto& d = params.dims;
    const ForwardTrace& target =
        target_view == View::street ? traces.street : traces.aerial;
    const ForwardTrace& other =
        target_view == View::street ? traces.aerial : traces.street;
    if (target.stage1_post.c != d.c1 ||
        static_cast<int>(other.pre_norm.size()) != d.k)
        throw TraceError("grad_cam: traces do not match model dims");

    // d(score)/d(pooled) = W2^T * pre_norm_other; alpha_k divides by H*W
    Vec alpha(d.c1, 0.0);
    for (int k = 0; k < d.k; ++k)
        for (int c1 = 0; c1 < d.c1; ++c1)
            alpha[c1] += params.w2[static_cast<std::size_t>(k) * d.c1 + c1] *
                         other.pre_norm[k];
    const int h = target.stage1_post.h;
    const int w = target.stage1_post.w;
    double inv = 1.0 / static_cast<double>(h * w);
    for (auto& a : alpha) a *= inv;

    ActivationMap map;
    map.view = target_view;
    map.h = h;
    map.w = w;
    map.values.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int c1 = 0; c1 < d.c1; ++c1)
                acc += alpha[c1] * target.stage1_post.at(r, c, c1);
            map.at(r, c) = acc > 0.0 ? acc : 0.0;
        }
    return map;
}

std::vector<PixelWeight> threshold_pixels(const ActivationMap& map, double tau) {
    if (map.values.empty()) throw DegenerateMapError("threshold_pixels: empty map");
    auto [mn_it, mx_it] = std::minmax_element(map.values.begin(), map.values.end());
    double mn = *mn_it, mx = *mx_it;
    if (!(mx > 0.0) || mx == mn)
        throw DegenerateMapError("threshold_pixels: all-zero or constant map");
    std::vector<PixelWeight> out;
    for (int r = 0; r < map.h; ++r)
        for (int c = 0; c < map.w; ++c) {
            double v = (map.at(r, c) - mn) / (mx - mn);
            if (v > tau) out.push_back({r, c, v});
        }
    return out;
}

void write_map_cvfm(const std::string& path, const ActivationMap& map) {
    Tensor3 t(map.h, map.w, 1);
    for (int r = 0; r < map.h; ++r)
        for (int c = 0; c < map.w; ++c) t.at(r, c, 0) = map.at(r, c);
    write_feature_map(path, t);
}

void write_map_pgm(const std::string& path, const ActivationMap& map) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_map_pgm: cannot open " + path, 0);
    double mx = *std::max_element(map.values.begin(), map.values.end());
    if (mx <= 0.0) mx = 1.0;
    f << "P5\n" << map.w << " " << map.h << "\n255\n";
    for (double v : map.values) {
        int g = static_cast<int>(std::lround(255.0 * v / mx));
        f.put(static_cast<char>(std::clamp(g, 0, 255)));
    }
}

}  // namespace cvgeo

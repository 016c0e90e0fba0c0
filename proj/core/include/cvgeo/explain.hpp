#ifndef CVGEO_EXPLAIN_HPP
#define CVGEO_EXPLAIN_HPP

#include <string>
#include <vector>

#include "cvgeo/model.hpp"

namespace cvgeo {

struct ActivationMap {
    View view = View::street;
    int h = 0;
    int w = 0;
    std::vector<double> values;  // H x W, row-major, >= 0 after ReLU

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * w + c]; }
    double at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * w + c];
    }
};

struct MatchingScore {
    double score = 0.0;  // <pre_norm_street, pre_norm_aerial>, no L2 norm
    ForwardTrace street;
    ForwardTrace aerial;
};

MatchingScore matching_score(const ModelParams& params, const Tensor3& street,
                             const Tensor3& aerial);

// Grad-CAM over the stage-1 post-ReLU activations of one view: channel
// weights are the spatial mean of d(score)/dA_k (a closed form under average
// pooling), the map is ReLU of the weighted channel sum.
ActivationMap grad_cam(const ModelParams& params, const MatchingScore& traces,
                       View target_view);

struct PixelWeight {
    int row;
    int col;
    double weight;  // min-max normalized map value, in (tau, 1]
};

// Min-max normalizes the map and keeps pixels above tau.
std::vector<PixelWeight> threshold_pixels(const ActivationMap& map, double tau);

// Exports for inspection.
void write_map_cvfm(const std::string& path, const ActivationMap& map);
void write_map_pgm(const std::string& path, const ActivationMap& map);

}  // namespace cvgeo

#endif

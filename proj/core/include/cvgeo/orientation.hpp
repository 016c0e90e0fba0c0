#ifndef CVGEO_ORIENTATION_HPP
#define CVGEO_ORIENTATION_HPP

#include <vector>

#include "cvgeo/data.hpp"
#include "cvgeo/explain.hpp"
#include "cvgeo/model.hpp"

namespace cvgeo {

// B-bin circular distribution over [0, 360); bin b covers
// [b*360/B, (b+1)*360/B). Normalized to sum 1.
struct AngularHistogram {
    std::vector<double> mass;
    std::size_t bins() const { return mass.size(); }
};

struct OrientationEstimate {
    double phi_deg = 0.0;           // argmax shift of the correlation
    double correlation_peak = 0.0;
    std::vector<double> correlation;  // full c(phi), length B
    double secondary_phi_deg = 0.0;   // best peak >= 10 deg from the primary
    double secondary_peak = 0.0;
};

struct ErrorDistribution {
    std::vector<double> errors_deg;     // wrapped to (-180, 180]
    std::vector<double> histogram;      // fraction per bin
    double bin_width_deg = 5.0;
    double frac_within_3p5 = 0.0;       // |err| <= 3.5 deg
    double frac_near_180 = 0.0;         // within +-5 deg of 180
};

// wraps into (-180, 180]
double wrap_angle(double deg);

// Street panorama: column c carries azimuth 360*(c+0.5)/W_s.
AngularHistogram street_histogram(const std::vector<PixelWeight>& pixels,
                                  int w_s, int bins);

// Aerial: polar angle about the image center, south axis zero, clockwise.
// Pixels with radius < 0.5 or outside the inscribed disk are ignored.
AngularHistogram aerial_histogram(const std::vector<PixelWeight>& pixels,
                                  int h_a, int bins);

// circular box filter of width 3
AngularHistogram smooth_histogram(const AngularHistogram& h);

// c(phi) = sum_theta p_street(theta) * p_aerial(theta + phi) via FFT.
OrientationEstimate circular_correlate(const AngularHistogram& p_street,
                                       const AngularHistogram& p_aerial);

struct OrientationOptions {
    double tau = 0.5;
    int bins = 360;
    bool smooth = false;
};

// Full pipeline: Grad-CAM on both views, threshold, histograms, correlate.
OrientationEstimate estimate_orientation(const ModelParams& params,
                                         const CrossViewPair& pair,
                                         const OrientationOptions& opts);

ErrorDistribution error_distribution(const std::vector<double>& estimates_deg,
                                     const std::vector<double>& truth_deg);

// Supervised baseline: a linear head on the concatenated un-normalized
// embeddings of both views predicting (cos phi, sin phi), squared error.
struct RegressionBaseline {
    Vec weights;  // 2 x (2K + 1), row-major, last column is the bias
    int k = 0;
};

struct RegressionConfig {
    int epochs = 200;
    double lr = 0.05;
    std::uint64_t seed = 0;
};

RegressionBaseline train_regression_baseline(
    const ModelParams& params, const std::vector<CrossViewPair>& pairs,
    const RegressionConfig& cfg);

double predict_rotation(const RegressionBaseline& head,
                        const ModelParams& params, const CrossViewPair& pair);

}  // namespace cvgeo

#endif

#include "cvgeo/orientation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "cvgeo/errors.hpp"
#include "cvgeo/fft.hpp"
#include "cvgeo/rng.hpp"

namespace cvgeo {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

void normalize_mass(AngularHistogram& h) {
    double total = 0.0;
    for (double v : h.mass) total += v;
    if (total > 0.0)
        for (double& v : h.mass) v /= total;
}

std::size_t angle_bin(double deg, std::size_t bins) {
    double t = std::fmod(deg, 360.0);
    if (t < 0.0) t += 360.0;
    auto b = static_cast<std::size_t>(t / 360.0 * static_cast<double>(bins));
    return b % bins;
}

}  // namespace

double wrap_angle(double deg) {
    double x = std::fmod(deg, 360.0);
    if (x > 180.0) x -= 360.0;
    if (x <= -180.0) x += 360.0;
    return x;
}

AngularHistogram street_histogram(const std::vector<PixelWeight>& pixels,
                                  int w_s, int bins) {
    if (pixels.empty())
        throw DegenerateMapError("street_histogram: empty pixel set");
    if (w_s <= 0 || bins <= 0)
        throw ShapeError("street_histogram: bad dims");
    AngularHistogram h;
    h.mass.assign(bins, 0.0);
    for (const auto& p : pixels) {
        double az = 360.0 * (p.col + 0.5) / w_s;
        h.mass[angle_bin(az, h.bins())] += p.weight;
    }
    normalize_mass(h);
    return h;
}

AngularHistogram aerial_histogram(const std::vector<PixelWeight>& pixels,
                                  int h_a, int bins) {
    if (pixels.empty())
        throw DegenerateMapError("aerial_histogram: empty pixel set");
    if (h_a <= 0 || bins <= 0) throw ShapeError("aerial_histogram: bad dims");
    const double ctr = (h_a - 1) / 2.0;
    const double radius = h_a / 2.0;
    AngularHistogram h;
    h.mass.assign(bins, 0.0);
    bool any = false;
    for (const auto& p : pixels) {
        double dr = p.row - ctr;
        double dc = p.col - ctr;
        double rho = std::hypot(dr, dc);
        if (rho < 0.5 || rho > radius) continue;
        double ang = std::atan2(-dc, dr) / kDegToRad;
        h.mass[angle_bin(ang, h.bins())] += p.weight;
        any = true;
    }
    if (!any)
        throw DegenerateMapError("aerial_histogram: all pixels at the center");
    normalize_mass(h);
    return h;
}

AngularHistogram smooth_histogram(const AngularHistogram& h) {
    const std::size_t n = h.bins();
    AngularHistogram out;
    out.mass.assign(n, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        out.mass[b] = (h.mass[(b + n - 1) % n] + h.mass[b] +
                       h.mass[(b + 1) % n]) / 3.0;
    return out;
}

OrientationEstimate circular_correlate(const AngularHistogram& p_street,
                                       const AngularHistogram& p_aerial) {
    const std::size_t n = p_street.bins();
    if (n == 0 || n != p_aerial.bins())
        throw ShapeError("circular_correlate: histogram length mismatch");

    // c(phi) = sum_theta ps(theta) pa(theta+phi) = idft(conj(Ps) * Pa);
    // conj(Ps) is the spectrum of index-reversed ps.
    ComplexSpectrum ps = dft(p_street.mass);
    ComplexSpectrum pa = dft(p_aerial.mass);
    ComplexSpectrum prod;
    prod.values.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        prod.values[k] = std::conj(ps.values[k]) * pa.values[k];
    std::vector<double> c = idft(prod);

    OrientationEstimate est;
    est.correlation = c;
    std::size_t best = 0;
    for (std::size_t b = 1; b < n; ++b)
        if (c[b] > c[best]) best = b;
    est.phi_deg = static_cast<double>(best) * 360.0 / static_cast<double>(n);
    est.correlation_peak = c[best];

    bool found = false;
    std::size_t second = 0;
    for (std::size_t b = 0; b < n; ++b) {
        double sep = std::fabs(wrap_angle(
            (static_cast<double>(b) - static_cast<double>(best)) * 360.0 /
            static_cast<double>(n)));
        if (sep < 10.0) continue;
        if (!found || c[b] > c[second]) {
            second = b;
            found = true;
        }
    }
    if (found) {
        est.secondary_phi_deg =
            static_cast<double>(second) * 360.0 / static_cast<double>(n);
        est.secondary_peak = c[second];
    }
    return est;
}

OrientationEstimate estimate_orientation(const ModelParams& params,
                                         const CrossViewPair& pair,
                                         const OrientationOptions& opts) {
    MatchingScore ms = matching_score(params, pair.street, pair.aerial);
    ActivationMap street_map = grad_cam(params, ms, View::street);
    ActivationMap aerial_map = grad_cam(params, ms, View::aerial);
    auto street_px = threshold_pixels(street_map, opts.tau);
    auto aerial_px = threshold_pixels(aerial_map, opts.tau);
    AngularHistogram ps = street_histogram(street_px, pair.street.w, opts.bins);
    AngularHistogram pa = aerial_histogram(aerial_px, pair.aerial.h, opts.bins);
    if (opts.smooth) {
        ps = smooth_histogram(ps);
        pa = smooth_histogram(pa);
    }
    return circular_correlate(ps, pa);
}

ErrorDistribution error_distribution(const std::vector<double>& estimates_deg,
                                     const std::vector<double>& truth_deg) {
    if (estimates_deg.size() != truth_deg.size())
        throw ShapeError("error_distribution: length mismatch");
    if (estimates_deg.empty())
        throw EmptyBatchError("error_distribution: no estimates");
    ErrorDistribution dist;
    const std::size_t nbins = 72;  // 5-degree bins over (-180, 180]
    dist.histogram.assign(nbins, 0.0);
    std::size_t near0 = 0, near180 = 0;
    for (std::size_t i = 0; i < estimates_deg.size(); ++i) {
        double e = wrap_angle(estimates_deg[i] - truth_deg[i]);
        dist.errors_deg.push_back(e);
        if (std::fabs(e) <= 3.5) ++near0;
        if (std::fabs(wrap_angle(e - 180.0)) <= 5.0) ++near180;
        auto b = static_cast<std::size_t>((e + 180.0) / dist.bin_width_deg);
        if (b >= nbins) b = nbins - 1;
        dist.histogram[b] += 1.0;
    }
    double inv = 1.0 / static_cast<double>(estimates_deg.size());
    for (auto& v : dist.histogram) v *= inv;
    dist.frac_within_3p5 = static_cast<double>(near0) * inv;
    dist.frac_near_180 = static_cast<double>(near180) * inv;
    return dist;
}

// ---------------------------------------------------------------------------
// Supervised regression baseline

namespace {

Vec regression_features(const ModelParams& params, const CrossViewPair& pair) {
    ForwardTrace s = forward_unnormalized(params, View::street, pair.street);
    ForwardTrace a = forward_unnormalized(params, View::aerial, pair.aerial);
    Vec f;
    f.reserve(s.pre_norm.size() + a.pre_norm.size() + 1);
    f.insert(f.end(), s.pre_norm.begin(), s.pre_norm.end());
    f.insert(f.end(), a.pre_norm.begin(), a.pre_norm.end());
    f.push_back(1.0);  // bias
    return f;
}

}  // namespace

RegressionBaseline train_regression_baseline(
    const ModelParams& params, const std::vector<CrossViewPair>& pairs,
    const RegressionConfig& cfg) {
    if (pairs.empty())
        throw EmptyBatchError("train_regression_baseline: no pairs");
    for (const auto& p : pairs)
        if (!p.rotation_deg)
            throw SupervisionError(
                "train_regression_baseline: pair '" + p.id +
                "' has no rotation ground truth");

    std::vector<Vec> feats;
    std::vector<std::array<double, 2>> targets;
    feats.reserve(pairs.size());
    for (const auto& p : pairs) {
        feats.push_back(regression_features(params, p));
        double phi = *p.rotation_deg * kDegToRad;
        targets.push_back({std::cos(phi), std::sin(phi)});
    }
    const std::size_t dim = feats[0].size();

    RegressionBaseline head;
    head.k = params.dims.k;
    head.weights.assign(2 * dim, 0.0);

    // full-batch gradient descent on mean squared error
    const double inv_n = 1.0 / static_cast<double>(pairs.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Vec grad(2 * dim, 0.0);
        for (std::size_t i = 0; i < feats.size(); ++i) {
            for (int o = 0; o < 2; ++o) {
                double pred = 0.0;
                const double* w = &head.weights[o * dim];
                for (std::size_t j = 0; j < dim; ++j) pred += w[j] * feats[i][j];
                double err = 2.0 * (pred - targets[i][o]) * inv_n;
                for (std::size_t j = 0; j < dim; ++j)
                    grad[o * dim + j] += err * feats[i][j];
            }
        }
        for (std::size_t j = 0; j < head.weights.size(); ++j)
            head.weights[j] -= cfg.lr * grad[j];
    }
    return head;
}

double predict_rotation(const RegressionBaseline& head,
                        const ModelParams& params, const CrossViewPair& pair) {
    Vec f = regression_features(params, pair);
    const std::size_t dim = f.size();
    if (head.weights.size() != 2 * dim)
        throw ShapeError("predict_rotation: head/feature dim mismatch");
    double c = 0.0, s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        c += head.weights[j] * f[j];
        s += head.weights[dim + j] * f[j];
    }
    double phi = std::atan2(s, c) / kDegToRad;
    if (phi < 0.0) phi += 360.0;
    return phi;
}

}  // namespace cvgeo

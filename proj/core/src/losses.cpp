#include "cvgeo/losses.hpp"

#include <cmath>

#include "cvgeo/errors.hpp"

namespace cvgeo {

double soft_margin(double d) {
    if (d > 0.0) return d + std::log1p(std::exp(-d));
    return std::log1p(std::exp(d));
}

double normalized_soft_margin(double alpha, double d) {
    return soft_margin(alpha * d) / alpha;
}

double soft_margin_grad(double alpha, double d) {
    return 1.0 / (1.0 + std::exp(-alpha * d));
}

BatchSimilarities pair_similarities(const std::vector<Vec>& anchors,
                                    const std::vector<Vec>& candidates,
                                    const std::vector<PairRef>& positives,
                                    const std::vector<PairRef>& negatives) {
    auto check_unit = [](const Vec& v) {
        if (!is_unit(v))
            throw NormalizationError("pair_similarities: non-unit embedding");
    };
    for (const auto& v : anchors) check_unit(v);
    for (const auto& v : candidates) check_unit(v);

    BatchSimilarities out;
    auto sim = [&](const PairRef& p) {
        if (p.anchor >= anchors.size() || p.candidate >= candidates.size())
            throw ShapeError("pair_similarities: pair index out of range");
        return dot(anchors[p.anchor], candidates[p.candidate]);
    };
    for (const auto& p : positives) {
        out.s_p.push_back(sim(p));
        out.pos_pairs.push_back(p);
    }
    for (const auto& p : negatives) {
        out.s_n.push_back(sim(p));
        out.neg_pairs.push_back(p);
    }
    return out;
}

BatchDistances to_distances(const BatchSimilarities& sims, DistanceKind kind) {
    BatchDistances out;
    auto conv = [kind](double s) {
        double d2 = 2.0 - 2.0 * s;
        if (d2 < 0.0) d2 = 0.0;
        return kind == DistanceKind::squared_euclidean ? d2 : std::sqrt(d2);
    };
    out.d_p.reserve(sims.s_p.size());
    out.d_n.reserve(sims.s_n.size());
    for (double s : sims.s_p) out.d_p.push_back(conv(s));
    for (double s : sims.s_n) out.d_n.push_back(conv(s));
    return out;
}

LossResult hard_triplet_loss(const std::vector<double>& d_p,
                             const std::vector<double>& d_n, double m) {
    if (d_p.size() != d_n.size())
        throw ShapeError("hard_triplet_loss: triplet arrays differ in length");
    if (d_p.empty()) throw EmptyBatchError("hard_triplet_loss: empty batch");
    const double inv_n = 1.0 / static_cast<double>(d_p.size());
    LossResult res;
    res.grad_p.assign(d_p.size(), 0.0);
    res.grad_n.assign(d_p.size(), 0.0);
    for (std::size_t i = 0; i < d_p.size(); ++i) {
        double h = d_p[i] - d_n[i] + m;
        if (h > 0.0) {
            res.value += h * inv_n;
            res.grad_p[i] = inv_n;
            res.grad_n[i] = -inv_n;
        }
    }
    return res;
}

LossResult weighted_soft_margin_loss(const std::vector<double>& d_p,
                                     const std::vector<double>& d_n,
                                     double alpha) {
    if (d_p.size() != d_n.size())
        throw ShapeError("weighted_soft_margin_loss: length mismatch");
    if (d_p.empty())
        throw EmptyBatchError("weighted_soft_margin_loss: empty batch");
    if (!(alpha > 0.0))
        throw ShapeError("weighted_soft_margin_loss: alpha must be positive");
    const double inv_n = 1.0 / static_cast<double>(d_p.size());
    LossResult res;
    res.grad_p.assign(d_p.size(), 0.0);
    res.grad_n.assign(d_p.size(), 0.0);
    for (std::size_t i = 0; i < d_p.size(); ++i) {
        double d = d_p[i] - d_n[i];
        res.value += soft_margin(alpha * d) * inv_n;
        double g = alpha * soft_margin_grad(alpha, d) * inv_n;
        res.grad_p[i] = g;
        res.grad_n[i] = -g;
    }
    return res;
}

LossResult binomial_loss(const BatchSimilarities& batch, const LossConfig& cfg) {
    if (batch.s_p.empty() || batch.s_n.empty())
        throw EmptyBatchError("binomial_loss: needs >= 1 positive and negative");
    double a_p = cfg.alpha_p;
    double a_n = cfg.alpha_n;
    double m_p = cfg.m_p;
    double m_n = cfg.m_n;
    if (cfg.kind == LossKind::binomial_sym) {
        a_n = a_p = cfg.alpha_p;
        m_n = m_p = cfg.m_p;
    }
    if (!(a_p > 0.0) || !(a_n > 0.0))
        throw ShapeError("binomial_loss: alphas must be positive");

    const double n_p = static_cast<double>(batch.s_p.size());
    const double n_n = static_cast<double>(batch.s_n.size());
    LossResult res;
    res.grad_p.assign(batch.s_p.size(), 0.0);
    res.grad_n.assign(batch.s_n.size(), 0.0);
    for (std::size_t i = 0; i < batch.s_p.size(); ++i) {
        double d = batch.s_p[i] - m_p;
        res.value += soft_margin(-a_p * d) / (a_p * n_p);
        res.grad_p[i] = -soft_margin_grad(-a_p, d) / n_p;
    }
    for (std::size_t i = 0; i < batch.s_n.size(); ++i) {
        double d = batch.s_n[i] - m_n;
        res.value += soft_margin(a_n * d) / (a_n * n_n);
        res.grad_n[i] = soft_margin_grad(a_n, d) / n_n;
    }
    return res;
}

}  // namespace cvgeo

#ifndef CVGEO_LOSSES_HPP
#define CVGEO_LOSSES_HPP

#include <cstddef>
#include <vector>

#include "cvgeo/tensor.hpp"

namespace cvgeo {

enum class LossKind { hard_triplet, weighted_soft, binomial_sym, binomial_asym };
enum class DistanceKind { squared_euclidean, euclidean };

struct LossConfig {
    LossKind kind = LossKind::weighted_soft;
    double margin = 0.5;     // hard triplet
    double alpha = 20.0;     // weighted soft margin
    double alpha_p = 5.0;    // binomial, positive side
    double alpha_n = 20.0;   // binomial, negative side
    double m_p = 0.0;
    double m_n = 0.7;
    DistanceKind distance = DistanceKind::squared_euclidean;
};

// overflow-safe log(1 + exp(d))
double soft_margin(double d);
// sigma_hat(alpha, d) = sigma(alpha d) / alpha; d/dd = 1/(1+exp(-alpha d))
double normalized_soft_margin(double alpha, double d);
double soft_margin_grad(double alpha, double d);

struct PairRef {
    std::size_t anchor;
    std::size_t candidate;
};

struct BatchSimilarities {
    std::vector<double> s_p;
    std::vector<double> s_n;
    std::vector<PairRef> pos_pairs;
    std::vector<PairRef> neg_pairs;
};

struct BatchDistances {
    std::vector<double> d_p;
    std::vector<double> d_n;
};

// Cosine similarities between unit-norm anchors and candidates for the given
// pairings. Inputs whose norm is off by more than 1e-6 are rejected.
BatchSimilarities pair_similarities(const std::vector<Vec>& anchors,
                                    const std::vector<Vec>& candidates,
                                    const std::vector<PairRef>& positives,
                                    const std::vector<PairRef>& negatives);

// For unit vectors d^2 = 2 - 2 s; the euclidean variant takes the root.
BatchDistances to_distances(const BatchSimilarities& sims, DistanceKind kind);

struct LossResult {
    double value = 0.0;
    // gradients w.r.t. the per-pair distance or similarity inputs
    std::vector<double> grad_p;
    std::vector<double> grad_n;
};

// Eq-style mean hinge over equal-length triplet arrays; the subgradient at
// the kink is 0, so inactive triplets move nothing.
LossResult hard_triplet_loss(const std::vector<double>& d_p,
                             const std::vector<double>& d_n, double m);

// mean of sigma(alpha (d_p - d_n))
LossResult weighted_soft_margin_loss(const std::vector<double>& d_p,
                                     const std::vector<double>& d_n,
                                     double alpha);

// sum sigma(-a_p (s^p - m_p)) / (a_p N_p) + sum sigma(a_n (s^n - m_n)) / (a_n N_n)
LossResult binomial_loss(const BatchSimilarities& batch, const LossConfig& cfg);

}  // namespace cvgeo

#endif

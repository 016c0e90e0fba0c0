#include "cvgeo/trainer.hpp"

#include <chrono>
#include <cmath>
#include <unordered_map>

#include "cvgeo/errors.hpp"

namespace cvgeo {

namespace {

void validate_config(const TrainingConfig& cfg, std::size_t n_pairs) {
    if (n_pairs < 2) throw EmptyBatchError("train: needs >= 2 training pairs");
    if (cfg.batch_pairs < 2)
        throw ConfigError("train: batch_pairs must be >= 2");
    if (cfg.epochs < 0 || cfg.warmup_epochs < 0)
        throw ConfigError("train: negative epoch counts");
    if (cfg.warmup_epochs > cfg.epochs)
        throw ConfigError("train: warmup_epochs must be <= epochs");
    if (cfg.lr < 0.0) throw ConfigError("train: negative learning rate");
    if (cfg.lr_decay <= 0.0) throw ConfigError("train: lr_decay must be > 0");
    if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
        throw ConfigError("train: val_fraction must be in [0, 1)");
    if (cfg.r == 0) throw ConfigError("train: r must be >= 1");
    if (cfg.pool_update_period < 1)
        throw ConfigError("train: pool_update_period must be >= 1");
    if (cfg.c1 <= 0 || cfg.k <= 0) throw ConfigError("train: bad model dims");
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Deterministic split shared by train() and alignment_matrix().
SplitIndices split_pairs(std::size_t n, double val_fraction,
                         std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed ^ 0x5f3759df);
    rng.shuffle(order);
    auto n_val = static_cast<std::size_t>(
        std::floor(val_fraction * static_cast<double>(n)));
    if (n - n_val < 2) n_val = n - 2;  // keep the training side viable
    SplitIndices s;
    s.val.assign(order.begin(), order.begin() + n_val);
    s.train.assign(order.begin() + n_val, order.end());
    return s;
}

struct EmbeddedSet {
    std::vector<Vec> street;
    std::vector<Vec> aerial;
    std::vector<std::string> ids;
};

EmbeddedSet embed_pairs(const ModelParams& params,
                        const std::vector<CrossViewPair>& pairs) {
    EmbeddedSet set;
    set.street.reserve(pairs.size());
    set.aerial.reserve(pairs.size());
    for (const auto& p : pairs) {
        set.street.push_back(forward(params, View::street, p.street).embedding);
        set.aerial.push_back(forward(params, View::aerial, p.aerial).embedding);
        set.ids.push_back(p.id);
    }
    return set;
}

SimilarityStats stats_from_embeddings(const EmbeddedSet& set) {
    SimilarityStats st;
    const std::size_t n = set.ids.size();
    double sum_p = 0.0, sum_p2 = 0.0, sum_n = 0.0, sum_n2 = 0.0;
    std::size_t count_n = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double sp = dot(set.street[i], set.aerial[i]);
        sum_p += sp;
        sum_p2 += sp * sp;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double sn = dot(set.street[i], set.aerial[j]);
            sum_n += sn;
            sum_n2 += sn * sn;
            ++count_n;
        }
    }
    double inv_p = 1.0 / static_cast<double>(n);
    st.mean_sp = sum_p * inv_p;
    st.var_sp = sum_p2 * inv_p - st.mean_sp * st.mean_sp;
    if (count_n > 0) {
        double inv_n = 1.0 / static_cast<double>(count_n);
        st.mean_sn = sum_n * inv_n;
        st.var_sn = sum_n2 * inv_n - st.mean_sn * st.mean_sn;
    }
    return st;
}

}  // namespace

AdamState init_adam(const ModelDims& dims) {
    AdamState st;
    st.m = zero_grads(dims);
    st.v = zero_grads(dims);
    st.step = 0;
    return st;
}

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.dims != grads.dims || params.dims != state.m.dims)
        throw ShapeError("adam_step: shape mismatch");
    state.step += 1;
    double t = static_cast<double>(state.step);
    double bc1 = 1.0 - std::pow(beta1, t);
    double bc2 = 1.0 - std::pow(beta2, t);

    auto update = [&](Vec& p, const Vec& g, Vec& m, Vec& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    };
    update(params.w1_street, grads.w1_street, state.m.w1_street,
           state.v.w1_street);
    update(params.b1_street, grads.b1_street, state.m.b1_street,
           state.v.b1_street);
    update(params.w1_aerial, grads.w1_aerial, state.m.w1_aerial,
           state.v.w1_aerial);
    update(params.b1_aerial, grads.b1_aerial, state.m.b1_aerial,
           state.v.b1_aerial);
    update(params.w2, grads.w2, state.m.w2, state.v.w2);
    update(params.b2, grads.b2, state.m.b2, state.v.b2);
}

RecallReport evaluate_recall(const ModelParams& params,
                             const std::vector<CrossViewPair>& pairs,
                             const std::vector<std::size_t>& ks) {
    EmbeddedSet set = embed_pairs(params, pairs);
    EmbeddingIndex index{set.ids, set.aerial};
    auto ranks = ground_truth_ranks(set.street, set.ids, index);
    return recall_at(ranks, ks, index.ids.size());
}

SimilarityStats similarity_stats(const ModelParams& params,
                                 const std::vector<CrossViewPair>& pairs) {
    return stats_from_embeddings(embed_pairs(params, pairs));
}

MarginCalibration calibrate_margins(const ModelParams& params,
                                    const std::vector<CrossViewPair>& pairs) {
    if (pairs.empty()) throw EmptyBatchError("calibrate_margins: no pairs");
    SimilarityStats st = similarity_stats(params, pairs);
    return MarginCalibration{st.mean_sn, st.mean_sp};
}

TrainResult train(const std::vector<CrossViewPair>& pairs,
                  const TrainingConfig& cfg) {
    validate_config(cfg, pairs.size());

    SplitIndices split = split_pairs(pairs.size(), cfg.val_fraction, cfg.seed);
    const bool rotate = cfg.regime == AlignmentRegime::random_rotate;

    Rng rng(cfg.seed);

    // Validation tensors are fixed for the whole run; in the unaligned
    // regime each val aerial gets one persistent random rotation.
    std::vector<CrossViewPair> val_pairs;
    val_pairs.reserve(split.val.size());
    for (auto i : split.val) {
        CrossViewPair p = pairs[i];
        if (rotate) {
            double phi = rng.uniform(0.0, 360.0);
            p.aerial = rotate_aerial(p.aerial, phi);
            p.rotation_deg = phi;
        }
        val_pairs.push_back(std::move(p));
    }

    ModelDims dims;
    dims.h_s = pairs[0].street.h;
    dims.w_s = pairs[0].street.w;
    dims.h_a = pairs[0].aerial.h;
    dims.c = pairs[0].street.c;
    dims.c1 = cfg.c1;
    dims.k = cfg.k;
    ModelParams params = init_params(dims, cfg.seed);
    AdamState adam = init_adam(dims);

    std::unordered_map<std::string, std::size_t> id_to_index;
    for (std::size_t i = 0; i < pairs.size(); ++i) id_to_index[pairs[i].id] = i;

    std::size_t pool_cap =
        cfg.pool_capacity == 0 ? split.train.size() : cfg.pool_capacity;
    MiningPool pool(pool_cap);

    const bool use_distance_loss =
        cfg.loss.kind == LossKind::hard_triplet ||
        cfg.loss.kind == LossKind::weighted_soft;

    TrainResult result{std::move(params), {}};
    result.report.n_train = split.train.size();
    result.report.n_val = split.val.size();

    long step = 0;
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_pairs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto epoch_start = std::chrono::steady_clock::now();
        double lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
        const bool warmup = epoch < cfg.warmup_epochs;

        std::vector<std::size_t> order = split.train;
        rng.shuffle(order);

        double loss_sum = 0.0;
        long loss_count = 0;

        for (std::size_t start = 0; start + batch <= order.size();
             start += batch) {
            // forward the batch
            std::vector<ForwardTrace> street_traces, aerial_traces;
            std::vector<std::string> ids;
            for (std::size_t b = 0; b < batch; ++b) {
                const CrossViewPair& p = pairs[order[start + b]];
                street_traces.push_back(
                    forward(result.params, View::street, p.street));
                Tensor3 aerial = rotate
                                     ? rotate_aerial(p.aerial,
                                                     rng.uniform(0.0, 360.0))
                                     : p.aerial;
                aerial_traces.push_back(
                    forward(result.params, View::aerial, aerial));
                ids.push_back(p.id);
            }

            std::vector<Vec> street_embs, aerial_embs;
            for (const auto& t : street_traces) street_embs.push_back(t.embedding);
            for (const auto& t : aerial_traces) aerial_embs.push_back(t.embedding);

            // negative selection; candidates index into aerial_embs, with
            // mined negatives appended after the batch
            std::vector<ForwardTrace> mined_traces;
            std::vector<PairRef> positives, negatives;
            for (std::size_t i = 0; i < batch; ++i) positives.push_back({i, i});

            auto add_batch_negatives = [&] {
                for (std::size_t i = 0; i < batch; ++i)
                    for (std::size_t j = 0; j < batch; ++j)
                        if (j != i) negatives.push_back({i, j});
            };

            if (cfg.mining == MiningMode::none) {
                add_batch_negatives();
            } else if (cfg.mining == MiningMode::batch) {
                auto sels = batch_hardest(street_embs, aerial_embs, ids);
                for (std::size_t i = 0; i < batch; ++i) {
                    std::size_t j = id_to_index.at(sels[i].selected_id);
                    // map back to the in-batch position
                    for (std::size_t b = 0; b < batch; ++b)
                        if (order[start + b] == j) negatives.push_back({i, b});
                }
            } else {
                for (std::size_t i = 0; i < batch; ++i) {
                    NegativeSelection sel;
                    try {
                        sel = pool.hardest_negatives(View::aerial,
                                                     street_embs[i], ids[i],
                                                     cfg.r, rng);
                    } catch (const PoolEmptyError&) {
                        // cold pool: fall back to the hardest in-batch negative
                        auto sels =
                            batch_hardest(street_embs, aerial_embs, ids);
                        for (std::size_t b = 0; b < batch; ++b)
                            if (ids[b] == sels[i].selected_id)
                                negatives.push_back({i, b});
                        continue;
                    }
                    const CrossViewPair& np = pairs[id_to_index.at(sel.selected_id)];
                    Tensor3 aerial =
                        rotate ? rotate_aerial(np.aerial,
                                               rng.uniform(0.0, 360.0))
                               : np.aerial;
                    mined_traces.push_back(
                        forward(result.params, View::aerial, aerial));
                    aerial_embs.push_back(mined_traces.back().embedding);
                    negatives.push_back({i, aerial_embs.size() - 1});
                }
                if (cfg.include_batch_negatives) add_batch_negatives();
            }

            BatchSimilarities sims =
                pair_similarities(street_embs, aerial_embs, positives, negatives);

            // loss + gradients w.r.t. embeddings
            double loss_value = 0.0;
            std::vector<Vec> g_street(batch, Vec(dims.k, 0.0));
            std::vector<Vec> g_aerial(aerial_embs.size(), Vec(dims.k, 0.0));

            auto add_sim_grad = [&](const PairRef& pr, double g) {
                // s = <e_street, e_aerial>
                for (int k = 0; k < dims.k; ++k) {
                    g_street[pr.anchor][k] += g * aerial_embs[pr.candidate][k];
                    g_aerial[pr.candidate][k] += g * street_embs[pr.anchor][k];
                }
            };

            if (warmup || use_distance_loss) {
                // triplets: one per negative pair, sharing the anchor's positive
                std::vector<double> d_p, d_n;
                BatchDistances dists = to_distances(sims, cfg.loss.distance);
                for (std::size_t t = 0; t < negatives.size(); ++t) {
                    d_p.push_back(dists.d_p[negatives[t].anchor]);
                    d_n.push_back(dists.d_n[t]);
                }
                LossResult lr_res =
                    (!warmup && cfg.loss.kind == LossKind::hard_triplet)
                        ? hard_triplet_loss(d_p, d_n, cfg.loss.margin)
                        : weighted_soft_margin_loss(d_p, d_n, cfg.loss.alpha);
                loss_value = lr_res.value;
                // chain through d(s): d^2 = 2 - 2s or d = sqrt(2 - 2s)
                for (std::size_t t = 0; t < negatives.size(); ++t) {
                    double gp = lr_res.grad_p[t];
                    double gn = lr_res.grad_n[t];
                    if (cfg.loss.distance == DistanceKind::euclidean) {
                        double dp = d_p[t], dn = d_n[t];
                        gp = dp > 1e-12 ? -gp / dp : 0.0;
                        gn = dn > 1e-12 ? -gn / dn : 0.0;
                    } else {
                        gp = -2.0 * gp;
                        gn = -2.0 * gn;
                    }
                    add_sim_grad(sims.pos_pairs[negatives[t].anchor], gp);
                    add_sim_grad(sims.neg_pairs[t], gn);
                }
            } else {
                LossResult lr_res = binomial_loss(sims, cfg.loss);
                loss_value = lr_res.value;
                for (std::size_t i = 0; i < sims.pos_pairs.size(); ++i)
                    add_sim_grad(sims.pos_pairs[i], lr_res.grad_p[i]);
                for (std::size_t t = 0; t < sims.neg_pairs.size(); ++t)
                    add_sim_grad(sims.neg_pairs[t], lr_res.grad_n[t]);
            }

            if (!std::isfinite(loss_value))
                throw DivergenceError("train: non-finite loss", step);
            loss_sum += loss_value;
            ++loss_count;

            ParamGrads grads = zero_grads(dims);
            for (std::size_t i = 0; i < batch; ++i)
                backward_accumulate(result.params, street_traces[i],
                                    g_street[i], grads);
            for (std::size_t i = 0; i < batch; ++i)
                backward_accumulate(result.params, aerial_traces[i],
                                    g_aerial[i], grads);
            for (std::size_t m = 0; m < mined_traces.size(); ++m)
                backward_accumulate(result.params, mined_traces[m],
                                    g_aerial[batch + m], grads);

            adam_step(result.params, grads, adam, lr, cfg.adam_beta1,
                      cfg.adam_beta2, cfg.adam_eps);
            ++step;

            if (cfg.mining == MiningMode::global &&
                step % cfg.pool_update_period == 0) {
                std::vector<BatchMember> members;
                for (std::size_t i = 0; i < batch; ++i) {
                    members.push_back(
                        {View::street, ids[i], street_embs[i]});
                    members.push_back(
                        {View::aerial, ids[i], aerial_embs[i]});
                }
                pool.refresh_from_batch(members, step);
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        if (!val_pairs.empty()) {
            RecallReport rr = evaluate_recall(result.params, val_pairs, {1});
            rec.recall_at1 = rr.recall_at_k.at(1);
            rec.recall_top1pct = rr.recall_top1pct;
            rec.val_similarity = similarity_stats(result.params, val_pairs);
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          epoch_start)
                .count();
        result.report.epochs.push_back(rec);
    }
    return result;
}

AlignmentMatrix alignment_matrix(const std::vector<CrossViewPair>& pairs,
                                 const TrainingConfig& cfg) {
    SplitIndices split = split_pairs(pairs.size(), cfg.val_fraction, cfg.seed);

    TrainingConfig aligned_cfg = cfg;
    aligned_cfg.regime = AlignmentRegime::aligned;
    TrainingConfig rotate_cfg = cfg;
    rotate_cfg.regime = AlignmentRegime::random_rotate;

    TrainResult model_aligned = train(pairs, aligned_cfg);
    TrainResult model_rotate = train(pairs, rotate_cfg);

    std::vector<CrossViewPair> val_aligned, val_rotated;
    Rng rot_rng(cfg.seed ^ 0xa11c0de5);
    for (auto i : split.val) {
        val_aligned.push_back(pairs[i]);
        CrossViewPair p = pairs[i];
        double phi = rot_rng.uniform(0.0, 360.0);
        p.aerial = rotate_aerial(p.aerial, phi);
        p.rotation_deg = phi;
        val_rotated.push_back(std::move(p));
    }

    AlignmentMatrix m;
    auto top1 = [](const ModelParams& params,
                   const std::vector<CrossViewPair>& val) {
        return evaluate_recall(params, val, {1}).recall_at_k.at(1);
    };
    m.top1[AlignmentMatrix::aligned][AlignmentMatrix::aligned] =
        top1(model_aligned.params, val_aligned);
    m.top1[AlignmentMatrix::rotate][AlignmentMatrix::aligned] =
        top1(model_aligned.params, val_rotated);
    m.top1[AlignmentMatrix::aligned][AlignmentMatrix::rotate] =
        top1(model_rotate.params, val_aligned);
    m.top1[AlignmentMatrix::rotate][AlignmentMatrix::rotate] =
        top1(model_rotate.params, val_rotated);
    return m;
}

}  // namespace cvgeo

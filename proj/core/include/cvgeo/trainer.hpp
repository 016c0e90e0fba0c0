#ifndef CVGEO_TRAINER_HPP
#define CVGEO_TRAINER_HPP

#include <vector>

#include "cvgeo/data.hpp"
#include "cvgeo/losses.hpp"
#include "cvgeo/mining.hpp"
#include "cvgeo/model.hpp"
#include "cvgeo/retrieval.hpp"

namespace cvgeo {

enum class AlignmentRegime { aligned, random_rotate };
enum class MiningMode { none, batch, global };

struct TrainingConfig {
    int batch_pairs = 12;
    int epochs = 30;
    // Epochs trained with the weighted soft-margin loss before switching to
    // the configured loss kind (the switch is abrupt).
    int warmup_epochs = 30;
    double lr = 0.01;
    double lr_decay = 0.95;  // multiplicative per epoch
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    AlignmentRegime regime = AlignmentRegime::random_rotate;
    MiningMode mining = MiningMode::global;
    LossConfig loss;
    std::uint64_t seed = 0;

    double val_fraction = 0.2;
    std::size_t pool_capacity = 0;  // 0 = whole training set
    std::size_t r = 5;              // hardest-candidate count
    int pool_update_period = 1;     // steps between pool refreshes
    int c1 = 32;
    int k = 64;
    // Also feed all in-batch negatives into the loss next to the mined one.
    bool include_batch_negatives = false;
};

struct AdamState {
    ModelParams m;  // first moments, same block layout as the params
    ModelParams v;  // second moments
    long step = 0;
};

struct SimilarityStats {
    double mean_sp = 0.0;
    double var_sp = 0.0;
    double mean_sn = 0.0;
    double var_sn = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double recall_at1 = 0.0;
    double recall_top1pct = 0.0;
    SimilarityStats val_similarity;
    double wall_seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t n_train = 0;
    std::size_t n_val = 0;
};

struct TrainResult {
    ModelParams params;
    TrainReport report;
};

AdamState init_adam(const ModelDims& dims);

// Bias-corrected Adam update; increments state.step.
void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Deterministic training loop: batch -> (rotate aerials when unaligned) ->
// forward -> mine -> loss -> backward -> Adam -> pool refresh. The mined
// negative is re-embedded with a fresh forward pass; the pool only selects.
TrainResult train(const std::vector<CrossViewPair>& pairs,
                  const TrainingConfig& cfg);

// Mean s^n and mean s^p over a sample of pairs under the given model; the
// sources for m_p and m_n respectively.
struct MarginCalibration {
    double m_p = 0.0;  // mean of s^n
    double m_n = 0.0;  // mean of s^p
};

MarginCalibration calibrate_margins(const ModelParams& params,
                                    const std::vector<CrossViewPair>& pairs);

// Trains one model per regime and evaluates each on aligned and rotated
// validation sets. row = validation regime, column = training regime.
struct AlignmentMatrix {
    double top1[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    static constexpr int aligned = 0;
    static constexpr int rotate = 1;
};

AlignmentMatrix alignment_matrix(const std::vector<CrossViewPair>& pairs,
                                 const TrainingConfig& cfg);

// Embeds a pair list and reports recall of street queries against the
// aerial reference index. Used by the trainer's per-epoch validation and by
// the CLI eval command.
RecallReport evaluate_recall(const ModelParams& params,
                             const std::vector<CrossViewPair>& pairs,
                             const std::vector<std::size_t>& ks);

SimilarityStats similarity_stats(const ModelParams& params,
                                 const std::vector<CrossViewPair>& pairs);

}  // namespace cvgeo

#endif

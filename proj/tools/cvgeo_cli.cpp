// Command-line front end: generate synthetic datasets, train, evaluate,
// run the alignment ablation, and export activation maps / orientation
// estimates. Exit codes: 0 ok, 2 bad config, 3 bad data, 4 divergence,
// 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cvgeo/data.hpp"
#include "cvgeo/explain.hpp"
#include "cvgeo/orientation.hpp"
#include "cvgeo/svg.hpp"
#include "cvgeo/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cvgeo;

namespace {

void check_threads_env() {
    const char* env = std::getenv("CVGEO_THREADS");
    if (!env) return;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
        throw ConfigError("CVGEO_THREADS must be a positive integer, got '" +
                          std::string(env) + "'");
    // All kernels are currently single threaded; the variable is validated so
    // scripts that set it keep working when parallel kernels land.
}

LossKind parse_loss(const std::string& s) {
    if (s == "hard_triplet") return LossKind::hard_triplet;
    if (s == "weighted_soft") return LossKind::weighted_soft;
    if (s == "binomial_sym") return LossKind::binomial_sym;
    if (s == "binomial_asym") return LossKind::binomial_asym;
    throw ConfigError("unknown loss '" + s + "'");
}

MiningMode parse_mining(const std::string& s) {
    if (s == "none") return MiningMode::none;
    if (s == "batch") return MiningMode::batch;
    if (s == "global") return MiningMode::global;
    throw ConfigError("unknown mining mode '" + s + "'");
}

AlignmentRegime parse_regime(const std::string& s) {
    if (s == "aligned") return AlignmentRegime::aligned;
    if (s == "random_rotate") return AlignmentRegime::random_rotate;
    throw ConfigError("unknown regime '" + s + "'");
}

const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::hard_triplet: return "hard_triplet";
        case LossKind::weighted_soft: return "weighted_soft";
        case LossKind::binomial_sym: return "binomial_sym";
        case LossKind::binomial_asym: return "binomial_asym";
    }
    return "?";
}

const char* mining_name(MiningMode m) {
    switch (m) {
        case MiningMode::none: return "none";
        case MiningMode::batch: return "batch";
        case MiningMode::global: return "global";
    }
    return "?";
}

const char* regime_name(AlignmentRegime r) {
    return r == AlignmentRegime::aligned ? "aligned" : "random_rotate";
}

// Loads a TrainingConfig from JSON, rejecting keys it does not know.
TrainingConfig config_from_json(const json& j) {
    TrainingConfig cfg;
    static const std::vector<std::string> known{
        "batch_pairs", "epochs", "warmup_epochs", "lr", "lr_decay",
        "regime", "mining", "loss", "margin", "alpha", "alpha_p", "alpha_n",
        "m_p", "m_n", "distance", "seed", "val_fraction", "pool_capacity",
        "r", "pool_update_period", "c1", "k", "include_batch_negatives"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key '" + key + "'");

    if (j.contains("batch_pairs")) cfg.batch_pairs = j["batch_pairs"];
    if (j.contains("epochs")) cfg.epochs = j["epochs"];
    if (j.contains("warmup_epochs")) cfg.warmup_epochs = j["warmup_epochs"];
    if (j.contains("lr")) cfg.lr = j["lr"];
    if (j.contains("lr_decay")) cfg.lr_decay = j["lr_decay"];
    if (j.contains("regime")) cfg.regime = parse_regime(j["regime"]);
    if (j.contains("mining")) cfg.mining = parse_mining(j["mining"]);
    if (j.contains("loss")) cfg.loss.kind = parse_loss(j["loss"]);
    if (j.contains("margin")) cfg.loss.margin = j["margin"];
    if (j.contains("alpha")) cfg.loss.alpha = j["alpha"];
    if (j.contains("alpha_p")) cfg.loss.alpha_p = j["alpha_p"];
    if (j.contains("alpha_n")) cfg.loss.alpha_n = j["alpha_n"];
    if (j.contains("m_p")) cfg.loss.m_p = j["m_p"];
    if (j.contains("m_n")) cfg.loss.m_n = j["m_n"];
    if (j.contains("distance")) {
        std::string d = j["distance"];
        if (d == "squared_euclidean")
            cfg.loss.distance = DistanceKind::squared_euclidean;
        else if (d == "euclidean")
            cfg.loss.distance = DistanceKind::euclidean;
        else
            throw ConfigError("unknown distance '" + d + "'");
    }
    if (j.contains("seed")) cfg.seed = j["seed"];
    if (j.contains("val_fraction")) cfg.val_fraction = j["val_fraction"];
    if (j.contains("pool_capacity"))
        cfg.pool_capacity = j["pool_capacity"].get<std::size_t>();
    if (j.contains("r")) cfg.r = j["r"].get<std::size_t>();
    if (j.contains("pool_update_period"))
        cfg.pool_update_period = j["pool_update_period"];
    if (j.contains("c1")) cfg.c1 = j["c1"];
    if (j.contains("k")) cfg.k = j["k"];
    if (j.contains("include_batch_negatives"))
        cfg.include_batch_negatives = j["include_batch_negatives"];
    return cfg;
}

json config_to_json(const TrainingConfig& cfg) {
    return json{{"batch_pairs", cfg.batch_pairs},
                {"epochs", cfg.epochs},
                {"warmup_epochs", cfg.warmup_epochs},
                {"lr", cfg.lr},
                {"lr_decay", cfg.lr_decay},
                {"regime", regime_name(cfg.regime)},
                {"mining", mining_name(cfg.mining)},
                {"loss", loss_name(cfg.loss.kind)},
                {"margin", cfg.loss.margin},
                {"alpha", cfg.loss.alpha},
                {"alpha_p", cfg.loss.alpha_p},
                {"alpha_n", cfg.loss.alpha_n},
                {"m_p", cfg.loss.m_p},
                {"m_n", cfg.loss.m_n},
                {"distance", cfg.loss.distance == DistanceKind::euclidean
                                 ? "euclidean"
                                 : "squared_euclidean"},
                {"seed", cfg.seed},
                {"val_fraction", cfg.val_fraction},
                {"pool_capacity", cfg.pool_capacity},
                {"r", cfg.r},
                {"pool_update_period", cfg.pool_update_period},
                {"c1", cfg.c1},
                {"k", cfg.k},
                {"include_batch_negatives", cfg.include_batch_negatives}};
}

std::vector<CrossViewPair> load_data(const std::string& manifest_path) {
    return load_pairs(load_manifest(manifest_path));
}

int run_gen(const std::string& out, int pairs, std::uint64_t seed,
            double noise, bool rotate, bool symmetric, int h_s, int w_s,
            int h_a, int channels) {
    SyntheticConfig cfg;
    cfg.n_pairs = pairs;
    cfg.seed = seed;
    cfg.noise_sigma = noise;
    cfg.symmetric_ridge = symmetric;
    cfg.h_s = h_s;
    cfg.w_s = w_s;
    cfg.h_a = h_a;
    cfg.channels = channels;
    auto data = generate_synthetic(cfg);
    if (rotate) {
        Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
        rotate_pairs(data, rng);
    }

    fs::create_directories(out);
    DatasetManifest manifest;
    for (const auto& p : data) {
        std::string sp = p.id + "_street.cvfm";
        std::string ap = p.id + "_aerial.cvfm";
        write_feature_map((fs::path(out) / sp).string(), p.street);
        write_feature_map((fs::path(out) / ap).string(), p.aerial);
        manifest.entries.push_back({p.id, sp, ap, p.rotation_deg});
    }
    save_manifest((fs::path(out) / "manifest.json").string(), manifest);
    std::cout << "wrote " << data.size() << " pairs to " << out << "\n";
    return 0;
}

int run_train(const std::string& data_path, const std::string& out,
              const TrainingConfig& cfg) {
    auto pairs = load_data(data_path);
    fs::create_directories(out);
    {
        std::ofstream f(fs::path(out) / "config.json");
        f << config_to_json(cfg).dump(2) << "\n";
    }
    TrainResult result = train(pairs, cfg);
    save_checkpoint((fs::path(out) / "model.cvck").string(), result.params);

    std::ofstream metrics(fs::path(out) / "metrics.jsonl");
    SvgSeries loss_series{"mean loss", "#d62728", {}, {}};
    SvgSeries recall_series{"val recall@1", "#1f77b4", {}, {}};
    for (const auto& e : result.report.epochs) {
        metrics << json{{"epoch", e.epoch},
                        {"mean_loss", e.mean_loss},
                        {"recall_at1", e.recall_at1},
                        {"recall_top1pct", e.recall_top1pct},
                        {"val_mean_sp", e.val_similarity.mean_sp},
                        {"val_mean_sn", e.val_similarity.mean_sn},
                        {"wall_seconds", e.wall_seconds}}
                       .dump()
                << "\n";
        loss_series.x.push_back(e.epoch);
        loss_series.y.push_back(e.mean_loss);
        recall_series.x.push_back(e.epoch);
        recall_series.y.push_back(e.recall_at1);
    }
    write_svg_lines((fs::path(out) / "loss_curve.svg").string(),
                    "training loss", {loss_series});
    write_svg_lines((fs::path(out) / "recall_curve.svg").string(),
                    "validation recall@1", {recall_series});
    const auto& last = result.report.epochs.back();
    std::cout << json{{"final_recall_at1", last.recall_at1},
                      {"final_recall_top1pct", last.recall_top1pct},
                      {"final_mean_loss", last.mean_loss},
                      {"n_train", result.report.n_train},
                      {"n_val", result.report.n_val}}
                     .dump(2)
              << "\n";
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_path) {
    ModelParams params = load_checkpoint(checkpoint);
    auto pairs = load_data(data_path);
    RecallReport rep = evaluate_recall(params, pairs, {1, 5, 10});
    json out{{"n", rep.ranks.size()},
             {"top1pct_k", rep.top1pct_k},
             {"recall_top1pct", rep.recall_top1pct}};
    for (const auto& [k, r] : rep.recall_at_k)
        out["recall_at_" + std::to_string(k)] = r;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_ablate(const std::string& data_path, const TrainingConfig& cfg) {
    auto pairs = load_data(data_path);
    AlignmentMatrix m = alignment_matrix(pairs, cfg);
    json out{
        {"val_aligned",
         {{"train_aligned", m.top1[AlignmentMatrix::aligned][AlignmentMatrix::aligned]},
          {"train_rotate", m.top1[AlignmentMatrix::aligned][AlignmentMatrix::rotate]}}},
        {"val_rotate",
         {{"train_aligned", m.top1[AlignmentMatrix::rotate][AlignmentMatrix::aligned]},
          {"train_rotate", m.top1[AlignmentMatrix::rotate][AlignmentMatrix::rotate]}}}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_gradcam(const std::string& checkpoint, const std::string& data_path,
                const std::string& id, const std::string& out) {
    ModelParams params = load_checkpoint(checkpoint);
    auto pairs = load_data(data_path);
    auto it = std::find_if(pairs.begin(), pairs.end(),
                           [&](const CrossViewPair& p) { return p.id == id; });
    if (it == pairs.end()) throw ManifestError("pair id '" + id + "' not found");
    fs::create_directories(out);
    MatchingScore ms = matching_score(params, it->street, it->aerial);
    for (View view : {View::street, View::aerial}) {
        ActivationMap map = grad_cam(params, ms, view);
        std::string stem = id + (view == View::street ? "_street" : "_aerial");
        write_map_cvfm((fs::path(out) / (stem + "_cam.cvfm")).string(), map);
        write_map_pgm((fs::path(out) / (stem + "_cam.pgm")).string(), map);
    }
    std::cout << json{{"id", id}, {"score", ms.score}}.dump(2) << "\n";
    return 0;
}

int run_orient(const std::string& checkpoint, const std::string& data_path,
               const std::string& out, double tau, int bins, bool smooth) {
    ModelParams params = load_checkpoint(checkpoint);
    auto pairs = load_data(data_path);
    OrientationOptions opts;
    opts.tau = tau;
    opts.bins = bins;
    opts.smooth = smooth;

    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "orientation.jsonl");
    std::vector<double> est, truth;
    int failures = 0;
    for (const auto& p : pairs) {
        json line{{"id", p.id}};
        try {
            OrientationEstimate e = estimate_orientation(params, p, opts);
            line["phi_deg"] = e.phi_deg;
            line["peak"] = e.correlation_peak;
            line["secondary_phi_deg"] = e.secondary_phi_deg;
            if (p.rotation_deg) {
                line["truth_deg"] = *p.rotation_deg;
                est.push_back(e.phi_deg);
                truth.push_back(*p.rotation_deg);
            }
        } catch (const DegenerateMapError& ex) {
            line["error"] = ex.what();
            ++failures;
        }
        f << line.dump() << "\n";
    }

    json summary{{"n", pairs.size()}, {"degenerate", failures}};
    if (!est.empty()) {
        ErrorDistribution ed = error_distribution(est, truth);
        summary["frac_within_3p5"] = ed.frac_within_3p5;
        summary["frac_near_180"] = ed.frac_near_180;
        std::vector<double> centers(ed.histogram.size());
        for (std::size_t i = 0; i < centers.size(); ++i)
            centers[i] = -180.0 + (i + 0.5) * ed.bin_width_deg;
        write_svg_bars((fs::path(out) / "error_histogram.svg").string(),
                       "orientation error (deg)", centers, ed.histogram);
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-view geo-localization toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_out = "data";
    int gen_pairs = 100;
    std::uint64_t gen_seed = 1;
    double gen_noise = 0.1;
    bool gen_rotate = false, gen_symmetric = false;
    int gen_hs = 8, gen_ws = 16, gen_ha = 16, gen_c = 8;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--pairs", gen_pairs, "number of pairs");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--noise", gen_noise, "additive noise sigma");
    gen->add_flag("--rotate", gen_rotate, "rotate aerials, record ground truth");
    gen->add_flag("--symmetric", gen_symmetric, "plant 180-deg symmetric ridges");
    gen->add_option("--hs", gen_hs, "street height");
    gen->add_option("--ws", gen_ws, "street width");
    gen->add_option("--ha", gen_ha, "aerial size");
    gen->add_option("--channels", gen_c, "channels");

    // shared train/ablate options
    std::string config_path, data_path, out_dir = "run";
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> epochs_flag;
    std::optional<std::string> mining_flag, loss_flag, regime_flag;

    auto add_train_opts = [&](CLI::App* cmd) {
        cmd->add_option("--data", data_path, "dataset manifest.json")->required();
        cmd->add_option("--config", config_path, "JSON training config");
        cmd->add_option("--seed", seed_flag, "override seed");
        cmd->add_option("--epochs", epochs_flag, "override epoch count");
        cmd->add_option("--mining", mining_flag, "none|batch|global");
        cmd->add_option("--loss", loss_flag,
                        "hard_triplet|weighted_soft|binomial_sym|binomial_asym");
        cmd->add_option("--regime", regime_flag, "aligned|random_rotate");
    };

    auto* trn = app.add_subcommand("train", "train a two-stream model");
    add_train_opts(trn);
    trn->add_option("--out", out_dir, "run directory");

    auto* abl = app.add_subcommand("ablate", "2x2 alignment ablation");
    add_train_opts(abl);

    auto* evl = app.add_subcommand("eval", "recall of a checkpoint");
    std::string ckpt_path;
    evl->add_option("--checkpoint", ckpt_path, "model.cvck")->required();
    evl->add_option("--data", data_path, "dataset manifest.json")->required();

    auto* cam = app.add_subcommand("gradcam", "export activation maps");
    std::string cam_id;
    cam->add_option("--checkpoint", ckpt_path, "model.cvck")->required();
    cam->add_option("--data", data_path, "dataset manifest.json")->required();
    cam->add_option("--id", cam_id, "pair id")->required();
    cam->add_option("--out", out_dir, "output directory");

    auto* ori = app.add_subcommand("orient", "estimate relative orientation");
    double tau = 0.5;
    int bins = 360;
    bool smooth = false;
    ori->add_option("--checkpoint", ckpt_path, "model.cvck")->required();
    ori->add_option("--data", data_path, "dataset manifest.json")->required();
    ori->add_option("--out", out_dir, "output directory");
    ori->add_option("--tau", tau, "activation threshold in (0,1)");
    ori->add_option("--bins", bins, "histogram bins");
    ori->add_flag("--smooth", smooth, "box-smooth the histograms");

    CLI11_PARSE(app, argc, argv);

    try {
        check_threads_env();
        if (gen->parsed())
            return run_gen(gen_out, gen_pairs, gen_seed, gen_noise, gen_rotate,
                           gen_symmetric, gen_hs, gen_ws, gen_ha, gen_c);

        if (trn->parsed() || abl->parsed()) {
            TrainingConfig cfg;
            if (!config_path.empty()) {
                std::ifstream f(config_path);
                if (!f) throw ConfigError("cannot open config " + config_path);
                json j;
                try {
                    f >> j;
                } catch (const json::exception& ex) {
                    throw ConfigError(std::string("bad config JSON: ") + ex.what());
                }
                cfg = config_from_json(j);
            }
            if (seed_flag) cfg.seed = *seed_flag;
            if (epochs_flag) {
                cfg.epochs = *epochs_flag;
                // keep the invariant warmup <= epochs when only --epochs is
                // shortened and the config did not pin a warmup itself
                cfg.warmup_epochs = std::min(cfg.warmup_epochs, cfg.epochs);
            }
            if (mining_flag) cfg.mining = parse_mining(*mining_flag);
            if (loss_flag) cfg.loss.kind = parse_loss(*loss_flag);
            if (regime_flag) cfg.regime = parse_regime(*regime_flag);
            return trn->parsed() ? run_train(data_path, out_dir, cfg)
                                 : run_ablate(data_path, cfg);
        }
        if (evl->parsed()) return run_eval(ckpt_path, data_path);
        if (cam->parsed())
            return run_gradcam(ckpt_path, data_path, cam_id, out_dir);
        if (ori->parsed())
            return run_orient(ckpt_path, data_path, out_dir, tau, bins, smooth);
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    } catch (const DivergenceError& ex) {
        std::cerr << "training diverged: " << ex.what() << "\n";
        return 4;
    } catch (const ShapeError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 3;
    } catch (const FormatError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 3;
    } catch (const ManifestError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 3;
    } catch (const SupervisionError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 3;
    } catch (const DegenerateMapError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 3;
    } catch (const EmptyBatchError& ex) {
        std::cerr << "data error: " << ex.what() << "\n";
        return 3;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

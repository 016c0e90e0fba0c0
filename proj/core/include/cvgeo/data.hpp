#ifndef CVGEO_DATA_HPP
#define CVGEO_DATA_HPP

#include <optional>
#include <string>
#include <vector>

#include "cvgeo/rng.hpp"
#include "cvgeo/tensor.hpp"

namespace cvgeo {

// Angular convention shared with the orientation module: 0 deg points south
// (image-down, +row), increasing clockwise on screen (south -> west -> north).
// Street panoramas map column c to azimuth 360*(c+0.5)/W.

struct CrossViewPair {
    std::string id;
    Tensor3 street;                    // H_s x W_s x C panorama
    Tensor3 aerial;                    // H_a x H_a x C, square, center-anchored
    std::optional<double> rotation_deg;  // ground truth, present iff rotated
};

struct SyntheticConfig {
    int n_pairs = 100;
    int latent_dim = 8;
    double noise_sigma = 0.1;
    int h_s = 8;
    int w_s = 16;
    int h_a = 16;
    int channels = 8;
    std::uint64_t seed = 1;
    // Plant a full line through the center instead of a half-line ray; this
    // makes the aerial angular structure 180-degree symmetric and reproduces
    // the bimodal orientation failure mode on demand.
    bool symmetric_ridge = false;
    // Angular sharpness of the planted street bump / aerial ridge.
    double street_kappa = 8.0;
    double ridge_kappa = 12.0;
};

struct ManifestEntry {
    std::string id;
    std::string street_path;
    std::string aerial_path;
    std::optional<double> rotation_deg;
};

enum class Split { train, val, test };

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    Split split = Split::train;
};

// Deterministic planted-pair generator. Street and aerial content derive from
// one shared latent through two fixed random channel transforms; the aerial
// carries an oriented ridge whose direction equals the street bump's azimuth,
// so the relative orientation of a rotated pair is recoverable.
std::vector<CrossViewPair> generate_synthetic(const SyntheticConfig& cfg);

// Rotate a square aerial tensor about its center by phi degrees (content at
// angle theta moves to theta + phi in the shared convention), bilinear
// resampling, zero outside the source grid, circular mask of radius H/2
// applied to the output.
Tensor3 rotate_aerial(const Tensor3& t, double phi_deg);

// Zero out everything outside the inscribed disk.
Tensor3 apply_circular_mask(const Tensor3& t);

// Rotate every aerial by an independent U[0,360) angle and record it.
void rotate_pairs(std::vector<CrossViewPair>& pairs, Rng& rng);

// CVFM binary format: "CVFM", version byte 1, u32 H W C (little endian),
// then H*W*C IEEE-754 binary32, row-major channel fastest. Values are stored
// as f32; the round-trip is bit-exact for f32-representable content.
Tensor3 read_feature_map(const std::string& path);
void write_feature_map(const std::string& path, const Tensor3& t);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& manifest);

// Materialize manifest entries into pairs (reads the referenced CVFM files).
std::vector<CrossViewPair> load_pairs(const DatasetManifest& manifest);

}  // namespace cvgeo

#endif

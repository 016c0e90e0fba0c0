#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "cvgeo/data.hpp"

using namespace cvgeo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cvgeo_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

// least-squares latent estimate from per-channel means, given the known
// generating transform; the independent oracle for the planted model
Vec recover_latent(const Tensor3& t, const std::vector<double>& m,
                   int latent_dim) {
    int C = t.c;
    Vec chan_mean(C, 0.0);
    for (int r = 0; r < t.h; ++r)
        for (int c = 0; c < t.w; ++c)
            for (int ch = 0; ch < C; ++ch) chan_mean[ch] += t.at(r, c, ch);
    // normal equations (M^T M) z = M^T chan_mean, solved by Gauss elimination
    std::vector<double> a(latent_dim * latent_dim, 0.0);
    Vec b(latent_dim, 0.0);
    for (int i = 0; i < latent_dim; ++i) {
        for (int j = 0; j < latent_dim; ++j)
            for (int ch = 0; ch < C; ++ch)
                a[i * latent_dim + j] +=
                    m[ch * latent_dim + i] * m[ch * latent_dim + j];
        for (int ch = 0; ch < C; ++ch)
            b[i] += m[ch * latent_dim + i] * chan_mean[ch];
    }
    for (int col = 0; col < latent_dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < latent_dim; ++r)
            if (std::abs(a[r * latent_dim + col]) >
                std::abs(a[piv * latent_dim + col]))
                piv = r;
        for (int j = 0; j < latent_dim; ++j)
            std::swap(a[col * latent_dim + j], a[piv * latent_dim + j]);
        std::swap(b[col], b[piv]);
        for (int r = 0; r < latent_dim; ++r) {
            if (r == col) continue;
            double f = a[r * latent_dim + col] / a[col * latent_dim + col];
            for (int j = 0; j < latent_dim; ++j)
                a[r * latent_dim + j] -= f * a[col * latent_dim + j];
            b[r] -= f * b[col];
        }
    }
    Vec z(latent_dim);
    for (int i = 0; i < latent_dim; ++i) z[i] = b[i] / a[i * latent_dim + i];
    return z;
}

}  // namespace

TEST_CASE("generate_synthetic is deterministic") {
    SyntheticConfig cfg;
    cfg.n_pairs = 3;
    cfg.seed = 99;
    auto a = generate_synthetic(cfg);
    auto b = generate_synthetic(cfg);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].street.data == b[i].street.data);
        CHECK(a[i].aerial.data == b[i].aerial.data);
        CHECK_FALSE(a[i].rotation_deg.has_value());
    }
}

TEST_CASE("noiseless matched pairs share the latent") {
    SyntheticConfig cfg;
    cfg.n_pairs = 12;
    cfg.noise_sigma = 0.0;
    cfg.seed = 17;

    // regenerate the fixed view transforms exactly as the generator does
    Rng rng(cfg.seed);
    int C = cfg.channels, L = cfg.latent_dim;
    std::vector<double> m_street(C * L), m_aerial(C * L);
    double scale = 1.0 / std::sqrt(static_cast<double>(L));
    for (auto& v : m_street) v = rng.normal() * scale;
    for (auto& v : m_aerial) v = rng.normal() * scale;

    auto pairs = generate_synthetic(cfg);
    std::vector<Vec> zs, za;
    for (const auto& p : pairs) {
        zs.push_back(recover_latent(p.street, m_street, L));
        za.push_back(recover_latent(p.aerial, m_aerial, L));
    }
    // each street's recovered latent is most similar to its own aerial's
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double own = cosine_similarity(zs[i], za[i]);
        CHECK(own > 0.99);
        for (std::size_t j = 0; j < pairs.size(); ++j) {
            if (j == i) continue;
            CHECK(own > cosine_similarity(zs[i], za[j]));
        }
    }
}

TEST_CASE("rotate_aerial by 0 equals the masked input") {
    SyntheticConfig cfg;
    cfg.n_pairs = 1;
    cfg.seed = 5;
    auto pairs = generate_synthetic(cfg);
    Tensor3 rotated = rotate_aerial(pairs[0].aerial, 0.0);
    Tensor3 masked = apply_circular_mask(pairs[0].aerial);
    REQUIRE(rotated.data.size() == masked.data.size());
    for (std::size_t i = 0; i < rotated.data.size(); ++i)
        CHECK(rotated.data[i] == doctest::Approx(masked.data[i]).epsilon(1e-12));
}

TEST_CASE("rotate_aerial by 90 matches exact index rotation") {
    Tensor3 t(8, 8, 2);
    Rng rng(31);
    for (auto& v : t.data) v = rng.normal();
    Tensor3 rotated = rotate_aerial(t, 90.0);
    Tensor3 masked = apply_circular_mask(t);
    // in the clockwise-from-south convention a +90 degree rotation sends
    // source (r, c) = (ctr - dc', ctr + dr') for output offset (dr', dc')
    const int n = 8;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double ctr = (n - 1) / 2.0;
            double rho = std::hypot(r - ctr, c - ctr);
            if (rho > n / 2.0) continue;
            int sr = static_cast<int>(ctr - (c - ctr));
            int sc = static_cast<int>(ctr + (r - ctr));
            for (int ch = 0; ch < t.c; ++ch)
                CHECK(rotated.at(r, c, ch) ==
                      doctest::Approx(masked.at(sr, sc, ch)).epsilon(1e-12));
        }
}

TEST_CASE("rotate_aerial round trip on a smooth blob") {
    const int n = 32;
    Tensor3 t(n, n, 1);
    double ctr = (n - 1) / 2.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double d2 = (r - ctr - 3) * (r - ctr - 3) + (c - ctr + 2) * (c - ctr + 2);
            t.at(r, c, 0) = std::exp(-d2 / 18.0);
        }
    double max_abs = 1.0;
    Tensor3 back = rotate_aerial(rotate_aerial(t, 37.0), -37.0);
    Tensor3 masked = apply_circular_mask(t);
    double max_err = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double rho = std::hypot(r - ctr, c - ctr);
            if (rho > n / 2.0 - 2.0) continue;
            max_err = std::max(max_err,
                               std::abs(back.at(r, c, 0) - masked.at(r, c, 0)));
        }
    CHECK(max_err <= 0.05 * max_abs);
}

TEST_CASE("rotate_aerial approximately preserves in-disk mass") {
    const int n = 32;
    Tensor3 t(n, n, 1);
    double ctr = (n - 1) / 2.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double d2 = (r - ctr + 4) * (r - ctr + 4) + (c - ctr) * (c - ctr);
            t.at(r, c, 0) = std::exp(-d2 / 25.0);
        }
    Tensor3 masked = apply_circular_mask(t);
    double mass0 = 0.0;
    for (double v : masked.data) mass0 += v;
    for (double phi : {23.0, 90.0, 141.0, 310.0}) {
        Tensor3 rot = rotate_aerial(t, phi);
        double mass = 0.0;
        for (double v : rot.data) mass += v;
        CHECK(std::abs(mass - mass0) / mass0 < 0.02);
    }
}

TEST_CASE("rotate_aerial rejects non-square input") {
    Tensor3 t(4, 6, 1);
    CHECK_THROWS_AS(rotate_aerial(t, 10.0), ShapeError);
}

TEST_CASE("CVFM round trip is bit exact") {
    TempDir dir;
    Tensor3 t(4, 4, 2);
    Rng rng(77);
    for (auto& v : t.data) v = static_cast<float>(rng.normal());
    // edge values must survive too
    t.data[0] = 0.0;
    t.data[1] = -0.0;
    t.data[2] = static_cast<double>(std::numeric_limits<float>::denorm_min());
    t.data[3] = static_cast<double>(-std::numeric_limits<float>::max());

    std::string path = dir.file("t.cvfm");
    write_feature_map(path, t);
    Tensor3 back = read_feature_map(path);
    REQUIRE(back.h == t.h);
    REQUIRE(back.w == t.w);
    REQUIRE(back.c == t.c);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        float a = static_cast<float>(t.data[i]);
        float b = static_cast<float>(back.data[i]);
        CHECK(std::memcmp(&a, &b, sizeof(float)) == 0);
    }
}

TEST_CASE("CVFM rejects bad magic") {
    TempDir dir;
    std::string path = dir.file("bad.cvfm");
    std::ofstream f(path, std::ios::binary);
    f << "XXXX";
    std::uint32_t dims[3] = {1, 1, 1};
    char version = 1;
    f.write(&version, 1);
    f.write(reinterpret_cast<const char*>(dims), 12);
    float v = 0.0f;
    f.write(reinterpret_cast<const char*>(&v), 4);
    f.close();
    CHECK_THROWS_AS(read_feature_map(path), FormatError);
}

TEST_CASE("CVFM rejects header/payload mismatch") {
    TempDir dir;
    Tensor3 t(2, 2, 1);
    std::string path = dir.file("trunc.cvfm");
    write_feature_map(path, t);
    // rewrite the header to claim more data than the file holds
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(5);
    std::uint32_t big = 1000;
    f.write(reinterpret_cast<const char*>(&big), 4);
    f.close();
    CHECK_THROWS_AS(read_feature_map(path), FormatError);
}

TEST_CASE("manifest round trip and validation") {
    TempDir dir;
    Tensor3 t(2, 2, 1);
    write_feature_map(dir.file("a_s.cvfm"), t);
    write_feature_map(dir.file("a_a.cvfm"), t);
    write_feature_map(dir.file("b_s.cvfm"), t);
    write_feature_map(dir.file("b_a.cvfm"), t);

    std::ofstream f(dir.file("m.json"));
    f << R"([
      {"id":"a","street_path":"a_s.cvfm","aerial_path":"a_a.cvfm"},
      {"id":"b","street_path":"b_s.cvfm","aerial_path":"b_a.cvfm","rotation_deg":45.0}
    ])";
    f.close();

    DatasetManifest m = load_manifest(dir.file("m.json"));
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0].id == "a");
    CHECK_FALSE(m.entries[0].rotation_deg.has_value());
    CHECK(m.entries[1].rotation_deg.value() == 45.0);

    auto pairs = load_pairs(m);
    CHECK(pairs.size() == 2);
}

TEST_CASE("manifest rejects duplicate ids") {
    TempDir dir;
    Tensor3 t(2, 2, 1);
    write_feature_map(dir.file("x.cvfm"), t);
    std::ofstream f(dir.file("m.json"));
    f << R"([
      {"id":"a","street_path":"x.cvfm","aerial_path":"x.cvfm"},
      {"id":"a","street_path":"x.cvfm","aerial_path":"x.cvfm"}
    ])";
    f.close();
    CHECK_THROWS_AS(load_manifest(dir.file("m.json")), ManifestError);
}

TEST_CASE("manifest rejects out-of-range rotation") {
    TempDir dir;
    Tensor3 t(2, 2, 1);
    write_feature_map(dir.file("x.cvfm"), t);
    std::ofstream f(dir.file("m.json"));
    f << R"([{"id":"a","street_path":"x.cvfm","aerial_path":"x.cvfm","rotation_deg":370.0}])";
    f.close();
    CHECK_THROWS_AS(load_manifest(dir.file("m.json")), ManifestError);
}

TEST_CASE("manifest rejects dangling paths") {
    TempDir dir;
    std::ofstream f(dir.file("m.json"));
    f << R"([{"id":"a","street_path":"gone.cvfm","aerial_path":"gone.cvfm"}])";
    f.close();
    CHECK_THROWS_AS(load_manifest(dir.file("m.json")), ManifestError);
}

#include "cvgeo/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "CVFM I/O assumes a little-endian host");

namespace cvgeo {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kDegToRad = 0.017453292519943295;

// polar angle of (dr, dc) in the shared convention: south (=+row) is 0,
// increasing clockwise on screen
double pixel_angle_deg(double dr, double dc) {
    double a = std::atan2(-dc, dr) / kDegToRad;
    if (a < 0.0) a += 360.0;
    return a;
}

}  // namespace

std::vector<CrossViewPair> generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_pairs <= 0 || cfg.latent_dim <= 0 || cfg.channels <= 0 ||
        cfg.h_s <= 0 || cfg.w_s <= 0 || cfg.h_a <= 0)
        throw ShapeError("generate_synthetic: dims must be positive");
    if (cfg.noise_sigma < 0.0)
        throw ShapeError("generate_synthetic: noise_sigma must be >= 0");

    Rng rng(cfg.seed);
    const int C = cfg.channels;
    const int L = cfg.latent_dim;

    // fixed view transforms, shared by all pairs
    std::vector<double> m_street(static_cast<std::size_t>(C) * L);
    std::vector<double> m_aerial(static_cast<std::size_t>(C) * L);
    double scale = 1.0 / std::sqrt(static_cast<double>(L));
    for (auto& v : m_street) v = rng.normal() * scale;
    for (auto& v : m_aerial) v = rng.normal() * scale;

    const double ctr = (cfg.h_a - 1) / 2.0;
    const double radius = cfg.h_a / 2.0;

    std::vector<CrossViewPair> pairs;
    pairs.reserve(cfg.n_pairs);
    for (int i = 0; i < cfg.n_pairs; ++i) {
        Vec z(L);
        for (auto& v : z) v = rng.normal();
        double theta = rng.uniform(0.0, 360.0);

        Vec sp(C, 0.0), ap(C, 0.0);
        for (int ch = 0; ch < C; ++ch)
            for (int l = 0; l < L; ++l) {
                sp[ch] += m_street[static_cast<std::size_t>(ch) * L + l] * z[l];
                ap[ch] += m_aerial[static_cast<std::size_t>(ch) * L + l] * z[l];
            }

        CrossViewPair pair;
        pair.id = "p" + std::to_string(100000 + i).substr(1);

        pair.street = Tensor3(cfg.h_s, cfg.w_s, C);
        for (int r = 0; r < cfg.h_s; ++r)
            for (int c = 0; c < cfg.w_s; ++c) {
                double az = 360.0 * (c + 0.5) / cfg.w_s;
                double bump = std::exp(
                    cfg.street_kappa * (std::cos((az - theta) * kDegToRad) - 1.0));
                for (int ch = 0; ch < C; ++ch)
                    pair.street.at(r, c, ch) =
                        sp[ch] * bump + cfg.noise_sigma * rng.normal();
            }

        pair.aerial = Tensor3(cfg.h_a, cfg.h_a, C);
        for (int r = 0; r < cfg.h_a; ++r)
            for (int c = 0; c < cfg.h_a; ++c) {
                double dr = r - ctr;
                double dc = c - ctr;
                double rho = std::hypot(dr, dc);
                if (rho > radius) continue;  // outside the validity disk
                double angw = 0.0;
                if (rho >= 0.5) {
                    double d = (pixel_angle_deg(dr, dc) - theta) * kDegToRad;
                    double arg = cfg.symmetric_ridge ? std::cos(2.0 * d)
                                                     : std::cos(d);
                    angw = std::exp(cfg.ridge_kappa * (arg - 1.0));
                }
                double radial = rho / radius;
                for (int ch = 0; ch < C; ++ch)
                    pair.aerial.at(r, c, ch) =
                        ap[ch] * angw * radial + cfg.noise_sigma * rng.normal();
            }

        pairs.push_back(std::move(pair));
    }
    return pairs;
}

Tensor3 apply_circular_mask(const Tensor3& t) {
    if (t.h != t.w) throw ShapeError("apply_circular_mask: tensor not square");
    Tensor3 out = t;
    const double ctr = (t.h - 1) / 2.0;
    const double radius = t.h / 2.0;
    for (int r = 0; r < t.h; ++r)
        for (int c = 0; c < t.w; ++c) {
            double rho = std::hypot(r - ctr, c - ctr);
            if (rho > radius)
                for (int ch = 0; ch < t.c; ++ch) out.at(r, c, ch) = 0.0;
        }
    return out;
}

Tensor3 rotate_aerial(const Tensor3& t, double phi_deg) {
    if (t.h != t.w) throw ShapeError("rotate_aerial: tensor not square");
    const Tensor3 src = apply_circular_mask(t);
    Tensor3 out(t.h, t.w, t.c);
    const double ctr = (t.h - 1) / 2.0;
    const double radius = t.h / 2.0;
    const double phi = phi_deg * kDegToRad;
    const double cs = std::cos(phi);
    const double sn = std::sin(phi);
    for (int r = 0; r < t.h; ++r)
        for (int c = 0; c < t.w; ++c) {
            double dr = r - ctr;
            double dc = c - ctr;
            if (std::hypot(dr, dc) > radius) continue;
            // sample the source at angle theta - phi (content moves to +phi)
            double sr = ctr + dr * cs - dc * sn;
            double sc = ctr + dc * cs + dr * sn;
            double fr = std::floor(sr);
            double fc = std::floor(sc);
            int r0 = static_cast<int>(fr);
            int c0 = static_cast<int>(fc);
            double wr = sr - fr;
            double wc = sc - fc;
            for (int ch = 0; ch < t.c; ++ch) {
                auto sample = [&](int rr, int cc) -> double {
                    if (rr < 0 || rr >= t.h || cc < 0 || cc >= t.w) return 0.0;
                    return src.at(rr, cc, ch);
                };
                out.at(r, c, ch) =
                    (1.0 - wr) * ((1.0 - wc) * sample(r0, c0) +
                                  wc * sample(r0, c0 + 1)) +
                    wr * ((1.0 - wc) * sample(r0 + 1, c0) +
                          wc * sample(r0 + 1, c0 + 1));
            }
        }
    return out;
}

void rotate_pairs(std::vector<CrossViewPair>& pairs, Rng& rng) {
    for (auto& p : pairs) {
        double phi = rng.uniform(0.0, 360.0);
        p.aerial = rotate_aerial(p.aerial, phi);
        p.rotation_deg = phi;
    }
}

// ---------------------------------------------------------------------------
// CVFM I/O

namespace {

constexpr char kMagic[4] = {'C', 'V', 'F', 'M'};
constexpr std::size_t kHeaderSize = 17;  // magic + version + 3*u32

std::uint32_t read_u32le(const unsigned char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

}  // namespace

void write_feature_map(const std::string& path, const Tensor3& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_feature_map: cannot open " + path, 0);
    f.write(kMagic, 4);
    char version = 1;
    f.write(&version, 1);
    std::uint32_t dims[3] = {static_cast<std::uint32_t>(t.h),
                             static_cast<std::uint32_t>(t.w),
                             static_cast<std::uint32_t>(t.c)};
    f.write(reinterpret_cast<const char*>(dims), 12);
    std::vector<float> buf(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i)
        buf[i] = static_cast<float>(t.data[i]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw FormatError("write_feature_map: short write to " + path, 0);
}

Tensor3 read_feature_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("read_feature_map: cannot open " + path, 0);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < kHeaderSize)
        throw FormatError("read_feature_map: truncated header", bytes.size());
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("read_feature_map: bad magic", 0);
    if (bytes[4] != 1)
        throw FormatError("read_feature_map: unsupported version", 4);
    std::uint64_t h = read_u32le(bytes.data() + 5);
    std::uint64_t w = read_u32le(bytes.data() + 9);
    std::uint64_t c = read_u32le(bytes.data() + 13);
    if (h == 0 || w == 0 || c == 0)
        throw FormatError("read_feature_map: zero dimension", 5);
    if (h > UINT64_MAX / w || h * w > UINT64_MAX / c ||
        h > INT32_MAX || w > INT32_MAX || c > INT32_MAX)
        throw FormatError("read_feature_map: dimension overflow", 5);
    std::uint64_t count = h * w * c;
    std::uint64_t payload = bytes.size() - kHeaderSize;
    if (count > payload / sizeof(float) || count * sizeof(float) != payload)
        throw FormatError("read_feature_map: payload size mismatch",
                          kHeaderSize);
    Tensor3 t(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    const unsigned char* p = bytes.data() + kHeaderSize;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        float v;
        std::memcpy(&v, p + i * sizeof(float), sizeof(float));
        t.data[i] = static_cast<double>(v);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ManifestError("load_manifest: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ManifestError("load_manifest: bad JSON in " + path + ": " +
                            e.what());
    }
    if (!j.is_array())
        throw ManifestError("load_manifest: top-level value must be an array");

    fs::path base = fs::path(path).parent_path();
    DatasetManifest m;
    std::vector<std::string> seen;
    for (const auto& e : j) {
        if (!e.is_object())
            throw ManifestError("load_manifest: entry is not an object");
        for (const auto& [key, _] : e.items())
            if (key != "id" && key != "street_path" && key != "aerial_path" &&
                key != "rotation_deg")
                throw ManifestError("load_manifest: unknown key '" + key + "'");
        ManifestEntry entry;
        try {
            entry.id = e.at("id").get<std::string>();
            entry.street_path = e.at("street_path").get<std::string>();
            entry.aerial_path = e.at("aerial_path").get<std::string>();
        } catch (const json::exception& ex) {
            throw ManifestError(std::string("load_manifest: ") + ex.what());
        }
        if (e.contains("rotation_deg")) {
            if (!e["rotation_deg"].is_number())
                throw ManifestError("load_manifest: rotation_deg not a number");
            double rot = e["rotation_deg"].get<double>();
            if (rot < 0.0 || rot >= 360.0)
                throw ManifestError("load_manifest: rotation_deg out of [0,360)");
            entry.rotation_deg = rot;
        }
        for (const auto& id : seen)
            if (id == entry.id)
                throw ManifestError("load_manifest: duplicate id '" + entry.id +
                                    "'");
        seen.push_back(entry.id);
        for (std::string* p : {&entry.street_path, &entry.aerial_path}) {
            if (!fs::path(*p).is_absolute()) *p = (base / *p).string();
            if (!fs::exists(*p))
                throw ManifestError("load_manifest: dangling path " + *p);
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    json j = json::array();
    fs::path base = fs::path(path).parent_path();
    for (const auto& e : manifest.entries) {
        json o;
        o["id"] = e.id;
        // absolute paths are stored relative to the manifest when possible;
        // relative ones are kept as given (already manifest-relative)
        auto store = [&](const std::string& p) {
            fs::path fp(p);
            if (!fp.is_absolute()) return p;
            std::error_code ec;
            fs::path rel = fs::relative(fp, base, ec);
            return (ec || rel.empty()) ? p : rel.string();
        };
        o["street_path"] = store(e.street_path);
        o["aerial_path"] = store(e.aerial_path);
        if (e.rotation_deg) o["rotation_deg"] = *e.rotation_deg;
        j.push_back(std::move(o));
    }
    std::ofstream f(path);
    if (!f) throw ManifestError("save_manifest: cannot open " + path);
    f << j.dump(2) << "\n";
}

std::vector<CrossViewPair> load_pairs(const DatasetManifest& manifest) {
    std::vector<CrossViewPair> pairs;
    pairs.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        CrossViewPair p;
        p.id = e.id;
        p.street = read_feature_map(e.street_path);
        p.aerial = read_feature_map(e.aerial_path);
        p.rotation_deg = e.rotation_deg;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace cvgeo

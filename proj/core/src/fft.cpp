#include "cvgeo/fft.hpp"

#include <cmath>

namespace cvgeo {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// iterative radix-2 Cooley-Tukey
void fft_pow2(std::vector<cd>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = kTwoPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        cd wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cd u = a[i + j];
                cd v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

void dft_direct(std::vector<cd>& a, bool inverse) {
    const std::size_t n = a.size();
    std::vector<cd> out(n);
    double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        cd acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            double ang = sign * kTwoPi * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
            acc += a[t] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    a = std::move(out);
}

}  // namespace

void fft_complex(std::vector<cd>& x, bool inverse) {
    if (x.empty()) throw ShapeError("fft: empty input");
    if (is_pow2(x.size()))
        fft_pow2(x, inverse);
    else
        dft_direct(x, inverse);
    if (inverse) {
        double inv_n = 1.0 / static_cast<double>(x.size());
        for (auto& v : x) v *= inv_n;
    }
}

ComplexSpectrum dft(const std::vector<double>& signal) {
    if (signal.empty()) throw ShapeError("dft: empty input");
    std::vector<cd> a(signal.begin(), signal.end());
    fft_complex(a, false);
    return ComplexSpectrum{std::move(a)};
}

std::vector<double> idft(const ComplexSpectrum& spectrum) {
    if (spectrum.values.empty()) throw ShapeError("idft: empty input");
    std::vector<cd> a = spectrum.values;
    fft_complex(a, true);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].real();
    return out;
}

}  // namespace cvgeo

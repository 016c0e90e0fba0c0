#ifndef CVGEO_FFT_HPP
#define CVGEO_FFT_HPP

#include <complex>
#include <vector>

#include "cvgeo/errors.hpp"

namespace cvgeo {

using cd = std::complex<double>;

struct ComplexSpectrum {
    std::vector<cd> values;
    std::size_t length() const { return values.size(); }
};

// Forward DFT of a real signal. Radix-2 FFT when the length is a power of
// two, direct O(n^2) evaluation otherwise (the orientation histograms default
// to B=360, where the direct path is still sub-millisecond).
ComplexSpectrum dft(const std::vector<double>& signal);

// Inverse DFT; returns the real part (imaginary residue is discarded).
std::vector<double> idft(const ComplexSpectrum& spectrum);

// In-place complex transform used by both directions.
void fft_complex(std::vector<cd>& x, bool inverse);

}  // namespace cvgeo

#endif

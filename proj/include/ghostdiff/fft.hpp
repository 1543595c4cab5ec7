#pragma once

#include <complex>
#include <vector>

namespace ghostdiff::fft {

/// In-place forward DFT, sign -1 in the exponent, scaled by 1/sqrt(n)
/// so a forward/inverse round trip is the identity.
void forward_unitary(std::vector<std::complex<double>>& v);

/// In-place inverse DFT, sign +1 in the exponent, scaled by 1/sqrt(n).
void inverse_unitary(std::vector<std::complex<double>>& v);

/// In-place forward DFT without normalization.
void forward_raw(std::vector<std::complex<double>>& v);

}  // namespace ghostdiff::fft

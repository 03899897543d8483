#pragma once

#include <complex>
#include <vector>

namespace scenemem::features {

// In-place 2-D DFT of a row-major height x width grid. The inverse is
// unnormalized (FFTW convention); callers divide by width*height.
void fft2d(std::vector<std::complex<double>>& grid, int width, int height, bool inverse);

}  // namespace scenemem::features

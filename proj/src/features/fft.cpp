#include "scenemem/features/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace scenemem::features {

namespace {
std::mutex planner_mutex;  // FFTW's planner is not thread-safe
}

void fft2d(std::vector<std::complex<double>>& grid, int width, int height, bool inverse) {
  if (grid.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("fft2d: grid size mismatch");
  }
  auto* data = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex);
    plan = fftw_plan_dft_2d(height, width, data, data, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fft2d: planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex);
  fftw_destroy_plan(plan);
}

}  // namespace scenemem::features

#pragma once

// Linear (non-circular) convolution of box samples with a separable kernel,
// zero-padded to twice the box extent and evaluated with FFTW.

#include <fftw3.h>

#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"

namespace heatlab::detail {

// FFTW planners are not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

struct FftwPlan {
  fftw_plan plan = nullptr;
  FftwPlan() = default;
  explicit FftwPlan(fftw_plan p) : plan(p) {}
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

/// out = h^N * sum_j data_j K(x_i - x_j) over all box nodes i, where
/// K(d) = prod_a kernel_1d[d_a + n - 1] for integer offsets d_a in (-n, n).
inline std::vector<double> fft_convolve(const GridSpec& g, std::span<const double> data,
                                        std::span<const double> kernel_1d) {
  require(is_power_of_two(g.points_per_axis), ErrorKind::NotPowerOfTwo,
          "FFT path needs a power-of-two node count, got " + std::to_string(g.points_per_axis));
  const std::size_t n = g.points_per_axis;
  const std::size_t m = 2 * n;
  const int rank = g.dim;
  std::vector<int> dims(rank, static_cast<int>(m));

  std::size_t real_size = 1;
  for (int a = 0; a < rank; ++a) real_size *= m;
  const std::size_t complex_size = real_size / m * (m / 2 + 1);

  std::unique_ptr<double, FftwFree> signal(fftw_alloc_real(real_size));
  std::unique_ptr<double, FftwFree> kernel(fftw_alloc_real(real_size));
  std::unique_ptr<fftw_complex, FftwFree> signal_hat(fftw_alloc_complex(complex_size));
  std::unique_ptr<fftw_complex, FftwFree> kernel_hat(fftw_alloc_complex(complex_size));

  FftwPlan forward_signal, forward_kernel, backward;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward_signal.plan =
        fftw_plan_dft_r2c(rank, dims.data(), signal.get(), signal_hat.get(), FFTW_ESTIMATE);
    forward_kernel.plan =
        fftw_plan_dft_r2c(rank, dims.data(), kernel.get(), kernel_hat.get(), FFTW_ESTIMATE);
    backward.plan = fftw_plan_dft_c2r(rank, dims.data(), signal_hat.get(), signal.get(), FFTW_ESTIMATE);
  }

  // Padded layout: index (i_0..i_{N-1}) with i_a in [0, m).
  auto padded_index = [&](const std::array<std::size_t, 3>& idx) {
    std::size_t flat = 0;
    for (int a = 0; a < rank; ++a) flat = flat * m + idx[a];
    return flat;
  };

  std::fill(signal.get(), signal.get() + real_size, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) signal.get()[padded_index(g.index(i))] = data[i];

  // Offset d maps to padded index d mod m; index n (offset +-n) never occurs.
  std::vector<double> wrapped(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (j < n) wrapped[j] = kernel_1d[j + n - 1];
    else if (j > n) wrapped[j] = kernel_1d[j - n - 1];
  }
  for (std::size_t p = 0; p < real_size; ++p) {
    std::size_t rem = p;
    double k = 1.0;
    for (int a = rank - 1; a >= 0; --a) {
      k *= wrapped[rem % m];
      rem /= m;
    }
    kernel.get()[p] = k;
  }

  fftw_execute(forward_signal.plan);
  fftw_execute(forward_kernel.plan);
  for (std::size_t p = 0; p < complex_size; ++p) {
    const double ar = signal_hat.get()[p][0], ai = signal_hat.get()[p][1];
    const double br = kernel_hat.get()[p][0], bi = kernel_hat.get()[p][1];
    signal_hat.get()[p][0] = ar * br - ai * bi;
    signal_hat.get()[p][1] = ar * bi + ai * br;
  }
  fftw_execute(backward.plan);

  const double scale = g.cell_volume() / static_cast<double>(real_size);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = scale * signal.get()[padded_index(g.index(i))];
  return out;
}

}  // namespace heatlab::detail

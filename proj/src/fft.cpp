#include "purephase/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace purephase::fft {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Unaligned plans keep results independent of where the allocator put the buffer.
constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

class Plan {
 public:
  explicit Plan(fftw_plan p) : p_{p} {
    if (p_ == nullptr) {
      throw std::runtime_error{"fftw: plan creation failed"};
    }
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock{planner_mutex()};
    fftw_destroy_plan(p_);
  }
  void execute(std::span<cplx> data) const {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p_, ptr, ptr);
  }

 private:
  fftw_plan p_;
};

void check_size(std::span<cplx> data, std::size_t n0, std::size_t n1) {
  if (data.size() != n0 * n1 || n0 == 0 || n1 == 0) {
    throw std::invalid_argument{"fft: buffer size does not match dimensions"};
  }
}

}  // namespace

void transform_axis(std::span<cplx> data, std::size_t n0, std::size_t n1, int axis, int sign) {
  check_size(data, n0, n1);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  const int fsign = sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan raw = nullptr;
  {
    std::lock_guard lock{planner_mutex()};
    if (axis == 1) {
      const int n = static_cast<int>(n1);
      raw = fftw_plan_many_dft(1, &n, static_cast<int>(n0), ptr, nullptr, 1, n, ptr, nullptr, 1, n, fsign,
                               kFlags);
    } else if (axis == 0) {
      const int n = static_cast<int>(n0);
      const int stride = static_cast<int>(n1);
      raw = fftw_plan_many_dft(1, &n, stride, ptr, nullptr, stride, 1, ptr, nullptr, stride, 1, fsign, kFlags);
    } else {
      throw std::invalid_argument{"fft: axis must be 0 or 1"};
    }
  }
  Plan{raw}.execute(data);
}

void transform_2d(std::span<cplx> data, std::size_t n0, std::size_t n1, int sign) {
  check_size(data, n0, n1);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan raw = nullptr;
  {
    std::lock_guard lock{planner_mutex()};
    raw = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), ptr, ptr,
                           sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, kFlags);
  }
  Plan{raw}.execute(data);
}

double angular_frequency(std::size_t j, std::size_t n, double d) {
  const auto nn = static_cast<long long>(n);
  long long jj = static_cast<long long>(j);
  if (jj >= (nn + 1) / 2) {
    jj -= nn;
  }
  return 2.0 * kPi * static_cast<double>(jj) / (static_cast<double>(n) * d);
}

}  // namespace purephase::fft

#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wwlab::fft {

using Complex = std::complex<double>;

// Plans are created once per (size, sign) and executed through the new-array
// interface, which FFTW documents as thread-safe. Planning itself is not, so
// the cache is guarded. FFTW_ESTIMATE keeps plans deterministic across runs.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

// Unnormalized forward transform: out_k = sum_j in_j exp(-2 pi i jk/n).
inline void forward(const Complex* in, Complex* out, int n) {
  fftw_plan plan = PlanCache::instance().get(n, FFTW_FORWARD);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

// Normalized inverse transform, so inverse(forward(u)) == u.
inline void inverse(const Complex* in, Complex* out, int n) {
  fftw_plan plan = PlanCache::instance().get(n, FFTW_BACKWARD);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / n;
  for (int j = 0; j < n; ++j) out[j] *= scale;
}

inline std::vector<Complex> forward(const std::vector<Complex>& u) {
  std::vector<Complex> out(u.size());
  forward(u.data(), out.data(), static_cast<int>(u.size()));
  return out;
}

inline std::vector<Complex> forward(const std::vector<double>& u) {
  std::vector<Complex> tmp(u.begin(), u.end());
  return forward(tmp);
}

inline std::vector<Complex> inverse(const std::vector<Complex>& spec) {
  std::vector<Complex> out(spec.size());
  inverse(spec.data(), out.data(), static_cast<int>(spec.size()));
  return out;
}

}  // namespace wwlab::fft

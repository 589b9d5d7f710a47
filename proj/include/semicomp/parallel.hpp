#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace semicomp {

// Runs fn(i) for i in [0, n) on up to `threads` workers using contiguous
// chunks. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, begin, end] {
      try {
        for (int i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Pairwise (cascade) summation; the result depends only on the input order.
inline double pairwise_sum(const double* x, Eigen::Index n) {
  if (n <= 8) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const Eigen::Index half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

template <class RowMajorMatrix>
Eigen::VectorXd pairwise_row_sum(const RowMajorMatrix& m, Eigen::Index begin, Eigen::Index end) {
  if (end - begin <= 8) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(m.cols());
    for (Eigen::Index i = begin; i < end; ++i) s += m.row(i).transpose();
    return s;
  }
  const Eigen::Index mid = begin + (end - begin) / 2;
  return pairwise_row_sum(m, begin, mid) + pairwise_row_sum(m, mid, end);
}

}  // namespace semicomp

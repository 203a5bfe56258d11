#ifndef GMC_ENSEMBLE_HPP
#define GMC_ENSEMBLE_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "gmc/common.hpp"
#include "gmc/rng.hpp"

namespace gmc {

/// Welford mean/variance with Chan's pairwise merge.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  void merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const auto n = n_ + o.n_;
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / static_cast<double>(n);
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / static_cast<double>(n);
    n_ = n;
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Standard error of the mean.
  double se() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Fixed-size bank of RunningStats.
class StatsBank {
 public:
  StatsBank() = default;
  explicit StatsBank(std::size_t n) : stats_(n) {}
  RunningStats& operator[](std::size_t i) { return stats_[i]; }
  const RunningStats& operator[](std::size_t i) const { return stats_[i]; }
  std::size_t size() const { return stats_.size(); }
  void merge(const StatsBank& o) {
    for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i].merge(o.stats_[i]);
  }

 private:
  std::vector<RunningStats> stats_;
};

inline constexpr std::int64_t kReplicaBlock = 1024;

/// Runs fn(acc, r, master.child(r)) for r in [0, replicas). Replicas are
/// grouped into fixed blocks, each with its own copy of `init`; blocks are
/// merged in index order, so the result does not depend on the thread count.
template <typename Acc, typename Fn>
Acc reduce_replicas(std::int64_t replicas, SeedRecord master, const Acc& init, Fn&& fn) {
  if (replicas < 1) throw InvalidArgument("replicas must be >= 1");
  const std::int64_t blocks = (replicas + kReplicaBlock - 1) / kReplicaBlock;
  std::vector<Acc> partial(static_cast<std::size_t>(blocks), init);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t b = 0; b < blocks; ++b) {
    Acc& acc = partial[static_cast<std::size_t>(b)];
    const std::int64_t end = std::min(replicas, (b + 1) * kReplicaBlock);
    for (std::int64_t r = b * kReplicaBlock; r < end; ++r)
      fn(acc, r, master.child(static_cast<std::uint64_t>(r)));
  }
  Acc total = init;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace gmc

#endif  // GMC_ENSEMBLE_HPP

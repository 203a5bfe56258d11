#ifndef GMC_RNG_HPP
#define GMC_RNG_HPP

#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "gmc/common.hpp"

namespace gmc {

/// A 64-bit key plus a 64-bit stream index. Distinct streams under one key
/// are statistically independent; everything downstream is a pure function
/// of the record.
struct SeedRecord {
  std::uint64_t key = 0;
  std::uint64_t stream = 0;

  /// Deterministically derived sub-stream (replica r, level k, ...).
  SeedRecord child(std::uint64_t index) const;
  bool operator==(const SeedRecord&) const = default;
};

nlohmann::json to_json(const SeedRecord& seed);
SeedRecord seed_from_json(const nlohmann::json& doc);

std::uint64_t splitmix64(std::uint64_t x);

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Uniform and standard-normal draws from one stream. Block b of the
/// stream is philox(counter = (b, stream), key); draws never depend on
/// how many other streams were consumed before.
class RandomStream {
 public:
  explicit RandomStream(SeedRecord seed) : seed_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  template <typename Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& out) {
    for (Index i = 0; i < out.size(); ++i) out.derived().data()[i] = normal();
  }

  const SeedRecord& seed() const { return seed_; }

 private:
  void refill_();

  SeedRecord seed_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gmc

#endif  // GMC_RNG_HPP

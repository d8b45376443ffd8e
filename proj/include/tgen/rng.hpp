#ifndef TGEN_RNG_HPP
#define TGEN_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace tgen {

// Deterministic random source. The engine is std::mt19937_64 (its output
// sequence is fixed by the standard) and every distribution below is sampled
// with our own algorithms, so streams are reproducible across platforms and
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); never returns 0 (safe for logs).
  double uniform_pos();

  // Standard normal via Box-Muller, pair cached.
  double normal();

  // Gamma(shape, scale 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  // Chi-square with dof > 0 degrees of freedom.
  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  // Index draw from non-negative weights summing to ~1.
  std::size_t categorical(std::span<const double> probs);

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

// Independent substream for a named stage or flow, a pure function of
// (master seed, label). Scheduling order cannot affect it.
Rng derive_rng(std::uint64_t master_seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

}  // namespace tgen

#endif  // TGEN_RNG_HPP

#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcct {

#ifdef TCCT_FLOAT32
using Scalar = float;
#else
using Scalar = double;
#endif

// Error taxonomy shared by all modules. The CLI maps each type to a
// distinct exit code.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
template <typename E, typename... Parts>
[[noreturn]] void raise(Parts&&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  throw E(os.str());
}
}  // namespace detail

#define TCCT_CHECK_DIM(cond, ...) \
  do {                            \
    if (!(cond)) ::tcct::detail::raise<::tcct::DimensionError>(__VA_ARGS__); \
  } while (0)
#define TCCT_CHECK_CFG(cond, ...) \
  do {                            \
    if (!(cond)) ::tcct::detail::raise<::tcct::ConfigError>(__VA_ARGS__); \
  } while (0)
#define TCCT_CHECK_DATA(cond, ...) \
  do {                             \
    if (!(cond)) ::tcct::detail::raise<::tcct::DataError>(__VA_ARGS__); \
  } while (0)

// Deterministic RNG used everywhere weights or samples are drawn.
// A thin wrapper so call sites never reach for global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double gaussian(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // Uniform sample of k distinct indices from [0, n), ascending.
  std::vector<int> sample_without_replacement(int n, int k);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stable mix for deriving per-block seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace tcct

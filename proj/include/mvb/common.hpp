#ifndef MVB_COMMON_HPP
#define MVB_COMMON_HPP

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvb {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Usage-level failures: unreadable files, malformed input, shape mismatches.
// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Statistical prerequisites violated at computation time (empty out-of-bag
// sets, empty validation overlaps, degenerate classes). CLI exit code 1.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles.
struct DMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  DMatrix() = default;
  DMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

// FNV-1a, used for dataset/ensemble provenance fingerprints.
struct Fnv1a {
  std::uint64_t state = 1469598103934665603ull;

  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ull;
    }
  }
  void add_u64(std::uint64_t x) { update(&x, sizeof x); }
  void add_i32(std::int32_t x) { update(&x, sizeof x); }
  void add_f64(double x) { update(&x, sizeof x); }
  void add_str(const std::string& s) {
    add_u64(s.size());
    update(s.data(), s.size());
  }
};

inline std::string to_hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return std::string(buf);
}

}  // namespace mvb

#endif  // MVB_COMMON_HPP

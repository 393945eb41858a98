#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace v2x {

/// Thrown when a configuration value violates a documented bound.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-purpose streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent random streams keyed by purpose, so that e.g. fading draws do
/// not shift when the decoder changes.
enum class Stream : std::uint64_t {
  kMobility = 1,
  kShadowing = 2,
  kFading = 3,
  kSps = 4,
  kTraffic = 5,
  kPolicy = 6,
  kAgent = 7,
  kGa = 8,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(stream))));
}

inline double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double w_to_dbm(double w) {
  return w > 0.0 ? 10.0 * std::log10(w) + 30.0 : -INFINITY;
}
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Counting event sink. When a stream is attached every event is also written
/// as one JSON object per line.
class EventLog {
 public:
  void attach(std::ostream* out) { out_ = out; }
  bool tracing() const { return out_ != nullptr; }
  void emit(std::string_view kind, const std::string& json_fields = {});
  std::int64_t count(const std::string& kind) const {
    auto it = counts_.find(kind);
    return it == counts_.end() ? 0 : it->second;
  }
  const std::map<std::string, std::int64_t>& counts() const { return counts_; }
  void clear_counts() { counts_.clear(); }

 private:
  std::ostream* out_ = nullptr;
  std::map<std::string, std::int64_t> counts_;
};

/// Raises glibc's mmap and trim thresholds so the large, short-lived matrices
/// of a training step are recycled from the heap rather than mapped and
/// unmapped every step. No-op elsewhere. Call once from an entry point.
void tune_allocator();

/// Process-wide warning channel (stderr, can be silenced for tests/benchmarks).
void set_warnings_enabled(bool enabled);
void warn(std::string_view message);

}  // namespace v2x

#pragma once

// Foundational signal containers, seeded randomness, PRBS stimulus and the
// closed-form BPSK reference curve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scmodem {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Failure of a processing stage. `stage()` names the block that rejected its
// input so the CLI can report where a chain broke.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// ---------------------------------------------------------------------------
// Containers
// ---------------------------------------------------------------------------

// Ordered sequence of binary symbols. Every element is exactly 0 or 1.
class BitStream {
 public:
  BitStream() = default;
  explicit BitStream(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw std::invalid_argument("BitStream: element is not 0 or 1");
    }
  }
  BitStream(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) push_back(b);
  }

  void push_back(int bit) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("BitStream: element is not 0 or 1");
    bits_.push_back(static_cast<std::uint8_t>(bit));
  }
  void reserve(std::size_t n) { bits_.reserve(n); }

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  auto begin() const noexcept { return bits_.begin(); }
  auto end() const noexcept { return bits_.end(); }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  // Sub-range [first, first + count).
  BitStream slice(std::size_t first, std::size_t count) const {
    if (first > bits_.size() || count > bits_.size() - first)
      throw std::out_of_range("BitStream::slice: range exceeds stream");
    BitStream out;
    out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(first),
                     bits_.begin() + static_cast<std::ptrdiff_t>(first + count));
    return out;
  }

  void append(const BitStream& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
  }

  friend bool operator==(const BitStream&, const BitStream&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

namespace detail {
inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}
}  // namespace detail

// Real-valued amplitudes at symbol rate.
struct SymbolStream {
  std::vector<double> amplitudes;
  double symbol_rate_hz = 1000.0;

  SymbolStream() = default;
  SymbolStream(std::vector<double> a, double rate) : amplitudes(std::move(a)), symbol_rate_hz(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw std::invalid_argument("SymbolStream: symbol rate must be positive");
    detail::require_finite(amplitudes, "SymbolStream");
  }
  std::size_t size() const noexcept { return amplitudes.size(); }
};

// Uniformly sampled real signal.
struct Waveform {
  std::vector<double> samples;
  double sample_rate_hz = 80000.0;

  Waveform() = default;
  Waveform(std::vector<double> s, double rate) : samples(std::move(s)), sample_rate_hz(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw std::invalid_argument("Waveform: sample rate must be positive");
    detail::require_finite(samples, "Waveform");
  }
  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Counter-based generator: draw i of stream (seed, stream_id, substream) is
// mix64(key + i * gamma), with the key a hash of the triple. Output depends
// only on integer arithmetic, so the u64 sequence is identical on every
// platform. Gaussian draws use the Marsaglia polar method on top of it.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0, std::uint64_t substream = 0)
      : seed_(seed), stream_id_(stream_id), substream_(substream) {
    using detail::mix64;
    key_ = mix64(mix64(mix64(seed) + stream_id * 0xD1B54A32D192ED03ULL) + substream * 0x8CB92BA72F3D8DD7ULL);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t substream() const noexcept { return substream_; }

  // Independent child stream, e.g. one per Monte-Carlo batch.
  RngStream fork(std::uint64_t substream) const {
    return RngStream(seed_, stream_id_, detail::mix64(substream_ + 1) ^ substream);
  }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGoldenGamma);
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t substream_;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// PRBS
// ---------------------------------------------------------------------------

// Fibonacci LFSR with the standard maximal-length taps
// PRBS7 x^7+x^6+1, PRBS9 x^9+x^5+1, PRBS15 x^15+x^14+1, PRBS23 x^23+x^18+1.
// Each shift emits the feedback bit.
class Lfsr {
 public:
  Lfsr(int order, std::uint32_t seed) : order_(order) {
    switch (order) {
      case 7: tap_ = 6; break;
      case 9: tap_ = 5; break;
      case 15: tap_ = 14; break;
      case 23: tap_ = 18; break;
      default: throw std::invalid_argument("prbs: unsupported order " + std::to_string(order));
    }
    mask_ = (1u << order) - 1u;
    state_ = seed & mask_;
    if (state_ == 0) throw std::invalid_argument("prbs: all-zero seed locks the LFSR in a stuck state");
  }

  int order() const noexcept { return order_; }
  std::uint32_t state() const noexcept { return state_; }

  int next_bit() noexcept {
    const std::uint32_t fb = ((state_ >> (order_ - 1)) ^ (state_ >> (tap_ - 1))) & 1u;
    state_ = ((state_ << 1) | fb) & mask_;
    return static_cast<int>(fb);
  }

 private:
  int order_;
  int tap_ = 0;
  std::uint32_t mask_ = 0;
  std::uint32_t state_ = 0;
};

inline BitStream prbs_generate(int order, std::uint32_t seed, std::size_t n_bits) {
  Lfsr lfsr(order, seed);
  std::vector<std::uint8_t> out(n_bits);
  for (auto& b : out) b = static_cast<std::uint8_t>(lfsr.next_bit());
  return BitStream(std::move(out));
}

// ---------------------------------------------------------------------------
// Reference math
// ---------------------------------------------------------------------------

// Gaussian upper-tail probability, Q(x) = erfc(x / sqrt 2) / 2.
inline double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Coherent BPSK in AWGN: Q(sqrt(2 Eb/N0)).
inline double theoretical_ber_bpsk(double ebn0_db) {
  if (ebn0_db == std::numeric_limits<double>::infinity()) return 0.0;
  return q_function(std::sqrt(2.0 * db_to_linear(ebn0_db)));
}

// ---------------------------------------------------------------------------
// FIR helpers shared by the transmit and receive chains
// ---------------------------------------------------------------------------

// Full linear convolution, output length x.size() + h.size() - 1.
inline std::vector<double> convolve(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t n = 0; n < y.size(); ++n) {
    const std::size_t k_lo = n >= x.size() - 1 ? n - (x.size() - 1) : 0;
    const std::size_t k_hi = std::min(n, h.size() - 1);
    double acc = 0.0;
    for (std::size_t k = k_lo; k <= k_hi; ++k) acc += h[k] * x[n - k];
    y[n] = acc;
  }
  return y;
}

// Direct-form FIR with a circular delay line; one sample in, one sample out.
class FirFilter {
 public:
  FirFilter() = default;
  explicit FirFilter(std::vector<double> taps) : taps_(std::move(taps)), delay_(2 * taps_.size(), 0.0) {}

  const std::vector<double>& taps() const noexcept { return taps_; }

  double push(double x) noexcept {
    const std::size_t n = taps_.size();
    if (n == 0) return 0.0;
    // Mirrored buffer keeps the window contiguous.
    pos_ = pos_ == 0 ? n - 1 : pos_ - 1;
    delay_[pos_] = x;
    delay_[pos_ + n] = x;
    double acc = 0.0;
    const double* w = delay_.data() + pos_;
    for (std::size_t k = 0; k < n; ++k) acc += taps_[k] * w[k];
    return acc;
  }

  void reset() noexcept { std::fill(delay_.begin(), delay_.end(), 0.0); pos_ = 0; }

 private:
  std::vector<double> taps_;
  std::vector<double> delay_;
  std::size_t pos_ = 0;
};

}  // namespace scmodem

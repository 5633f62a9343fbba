#pragma once

// Bit-accurate two's-complement fixed point, an integer FIR mirroring the
// hardware low-pass filter, and test-vector export for HDL testbenches.

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scmodem/signal_core.hpp"

namespace scmodem::fx {

// Two's-complement format: codes in [-2^(w-1), 2^(w-1) - 1], value = code * 2^-frac.
struct QFormat {
  int word_bits = 16;
  int frac_bits = 15;

  constexpr QFormat() = default;
  constexpr QFormat(int word, int frac) : word_bits(word), frac_bits(frac) {
    if (word < 2 || word > 32) throw std::invalid_argument("QFormat: word_bits must be in [2, 32]");
    if (frac < 0 || frac > word - 1) throw std::invalid_argument("QFormat: frac_bits must be in [0, word_bits - 1]");
  }

  constexpr std::int64_t max_code() const noexcept { return (std::int64_t{1} << (word_bits - 1)) - 1; }
  constexpr std::int64_t min_code() const noexcept { return -(std::int64_t{1} << (word_bits - 1)); }
  double lsb() const noexcept { return std::ldexp(1.0, -frac_bits); }

  // "Q1.15" style: integer bits including sign, then fractional bits.
  std::string name() const { return "Q" + std::to_string(word_bits - frac_bits) + "." + std::to_string(frac_bits); }

  friend constexpr bool operator==(const QFormat&, const QFormat&) = default;
};

inline constexpr QFormat kQ15{16, 15};

inline std::int64_t saturate(std::int64_t code, const QFormat& q) noexcept {
  if (code > q.max_code()) return q.max_code();
  if (code < q.min_code()) return q.min_code();
  return code;
}

// Round half away from zero to the nearest code, then saturate.
inline std::int64_t fx_quantize(double value, const QFormat& q) {
  if (!std::isfinite(value)) throw std::invalid_argument("fx_quantize: non-finite value");
  const double scaled = std::round(std::ldexp(value, q.frac_bits));  // std::round is half-away
  if (scaled >= static_cast<double>(q.max_code())) return q.max_code();
  if (scaled <= static_cast<double>(q.min_code())) return q.min_code();
  return static_cast<std::int64_t>(scaled);
}

inline double fx_dequantize(std::int64_t code, const QFormat& q) { return std::ldexp(static_cast<double>(code), -q.frac_bits); }

// Arithmetic right shift with round-half-away-from-zero.
inline __int128 shift_round(__int128 acc, int shift) noexcept {
  if (shift <= 0) return acc << (-shift);
  const __int128 half = __int128{1} << (shift - 1);
  return acc >= 0 ? (acc + half) >> shift : -((-acc + half) >> shift);
}

inline int required_acc_bits(const QFormat& q, std::size_t n_taps) {
  return 2 * q.word_bits + static_cast<int>(std::bit_width(n_taps == 0 ? 0 : n_taps - 1));
}

struct FxFirFilter {
  std::vector<std::int64_t> coeff_codes;
  QFormat qformat = kQ15;
  int acc_bits = 0;
  int output_shift = 15;

  FxFirFilter() = default;
  FxFirFilter(std::vector<std::int64_t> codes, QFormat q, int shift)
      : coeff_codes(std::move(codes)), qformat(q), acc_bits(required_acc_bits(q, coeff_codes.size())),
        output_shift(shift) {
    validate();
  }

  void validate() const {
    if (coeff_codes.empty()) throw std::invalid_argument("FxFirFilter: no coefficients");
    for (auto c : coeff_codes)
      if (c < qformat.min_code() || c > qformat.max_code())
        throw std::invalid_argument("FxFirFilter: coefficient code outside QFormat");
    if (acc_bits < required_acc_bits(qformat, coeff_codes.size()) || acc_bits > 127)
      throw std::invalid_argument("FxFirFilter: accumulator too narrow for worst-case sum");
  }

  std::vector<double> real_taps() const {
    std::vector<double> t;
    t.reserve(coeff_codes.size());
    for (auto c : coeff_codes) t.push_back(fx_dequantize(c, qformat));
    return t;
  }
};

// Sample-at-a-time filter state; one instance per hardware filter.
class FxFirStream {
 public:
  explicit FxFirStream(const FxFirFilter& filter) : filter_(&filter), delay_(filter.coeff_codes.size(), 0) {
    filter.validate();
  }

  std::int64_t push(std::int64_t x) {
    const auto& q = filter_->qformat;
    if (x < q.min_code() || x > q.max_code()) throw std::invalid_argument("fx_fir_apply: input code outside QFormat");
    const std::size_t n = delay_.size();
    head_ = head_ == 0 ? n - 1 : head_ - 1;
    delay_[head_] = x;
    __int128 acc = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = head_ + k < n ? head_ + k : head_ + k - n;
      acc += static_cast<__int128>(filter_->coeff_codes[k]) * delay_[idx];
    }
    last_acc_ = acc;
    const __int128 shifted = shift_round(acc, filter_->output_shift);
    if (shifted > q.max_code()) return q.max_code();
    if (shifted < q.min_code()) return q.min_code();
    return static_cast<std::int64_t>(shifted);
  }

  // Accumulator before shift/saturate for the most recent sample.
  __int128 last_accumulator() const noexcept { return last_acc_; }

 private:
  const FxFirFilter* filter_;
  std::vector<std::int64_t> delay_;
  std::size_t head_ = 0;
  __int128 last_acc_ = 0;
};

inline std::vector<std::int64_t> fx_fir_apply(const FxFirFilter& filter, std::span<const std::int64_t> input_codes) {
  FxFirStream s(filter);
  std::vector<std::int64_t> out;
  out.reserve(input_codes.size());
  for (auto x : input_codes) out.push_back(s.push(x));
  return out;
}

// Hamming-windowed sinc low-pass, quantized to q. The center tap is nudged by
// at most one code towards a coefficient sum of exactly 2^frac_bits.
inline FxFirFilter fx_design_lpf(double cutoff_hz, double sample_rate_hz, int n_taps, QFormat q = kQ15) {
  if (!(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0))
    throw std::invalid_argument("fx_design_lpf: cutoff must be in (0, f_s/2)");
  if (n_taps < 1 || n_taps % 2 == 0) throw std::invalid_argument("fx_design_lpf: n_taps must be odd");
  const double fc = cutoff_hz / sample_rate_hz;
  const int mid = n_taps / 2;
  std::vector<double> h(static_cast<std::size_t>(n_taps));
  double sum = 0.0;
  for (int n = 0; n < n_taps; ++n) {
    const double w = n_taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(kTwoPi * n / (n_taps - 1));
    const double x = 2.0 * fc * (n - mid);
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    h[static_cast<std::size_t>(n)] = 2.0 * fc * sinc * w;
    sum += h[static_cast<std::size_t>(n)];
  }
  std::vector<std::int64_t> codes;
  codes.reserve(h.size());
  std::int64_t code_sum = 0;
  for (double v : h) {
    codes.push_back(fx_quantize(v / sum, q));
    code_sum += codes.back();
  }
  const std::int64_t unity = std::int64_t{1} << q.frac_bits;
  auto& center = codes[static_cast<std::size_t>(mid)];
  if (code_sum < unity) center = saturate(center + 1, q);
  else if (code_sum > unity) center = saturate(center - 1, q);
  return FxFirFilter(std::move(codes), q, q.frac_bits);
}

// |H(f)| of the quantized coefficients.
inline double magnitude_response(const FxFirFilter& filter, double freq_hz, double sample_rate_hz) {
  double re = 0.0, im = 0.0;
  const double w = kTwoPi * freq_hz / sample_rate_hz;
  const auto taps = filter.real_taps();
  for (std::size_t k = 0; k < taps.size(); ++k) {
    re += taps[k] * std::cos(w * static_cast<double>(k));
    im -= taps[k] * std::sin(w * static_cast<double>(k));
  }
  return std::hypot(re, im);
}

// ---------------------------------------------------------------------------
// Test vectors
// ---------------------------------------------------------------------------

struct VectorHeader {
  QFormat qformat = kQ15;
  std::size_t n_taps = 0;
  std::uint64_t seed = 0;
};

struct VectorFiles {
  std::filesystem::path stimulus;
  std::filesystem::path expected;
};

inline std::string format_vector_file(std::span<const std::int64_t> codes, const VectorHeader& h, const char* role) {
  std::ostringstream os;
  os << "# role " << role << '\n'
     << "# qformat " << h.qformat.name() << " word_bits=" << h.qformat.word_bits
     << " frac_bits=" << h.qformat.frac_bits << '\n'
     << "# taps " << h.n_taps << '\n'
     << "# seed " << h.seed << '\n'
     << "# count " << codes.size() << '\n';
  for (auto c : codes) os << c << '\n';
  return os.str();
}

namespace detail {
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f.flush()) throw std::runtime_error("write to '" + path.string() + "' failed");
}
}  // namespace detail

// Writes <prefix>_stimulus.txt and <prefix>_expected.txt: '#' header lines,
// then one decimal code per line.
inline VectorFiles export_testvectors(std::span<const std::int64_t> stimulus_codes,
                                      std::span<const std::int64_t> expected_codes,
                                      const std::filesystem::path& prefix, const VectorHeader& header) {
  if (stimulus_codes.size() != expected_codes.size())
    throw std::invalid_argument("export_testvectors: stimulus and expected lengths differ");
  VectorFiles files{prefix.string() + "_stimulus.txt", prefix.string() + "_expected.txt"};
  detail::write_text(files.stimulus, format_vector_file(stimulus_codes, header, "stimulus"));
  detail::write_text(files.expected, format_vector_file(expected_codes, header, "expected"));
  return files;
}

// Reads back a vector file, skipping header lines.
inline std::vector<std::int64_t> read_vector_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<std::int64_t> codes;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    codes.push_back(std::stoll(line));
  }
  return codes;
}

// Coefficient dump, one decimal code per line.
inline void write_coefficients(const FxFirFilter& filter, const std::filesystem::path& path) {
  std::string text;
  for (auto c : filter.coeff_codes) text += std::to_string(c) + '\n';
  detail::write_text(path, text);
}

}  // namespace scmodem::fx

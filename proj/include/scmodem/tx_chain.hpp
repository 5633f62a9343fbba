#pragma once

// Transmitter: line coding, pulse shaping and passband BPSK modulation.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scmodem/signal_core.hpp"

namespace scmodem {

// ---------------------------------------------------------------------------
// Line coding
// ---------------------------------------------------------------------------

enum class LineCode { UnipolarNRZ, PolarNRZ, BipolarAMI, Manchester };

inline constexpr LineCode kAllLineCodes[] = {LineCode::UnipolarNRZ, LineCode::PolarNRZ,
                                             LineCode::BipolarAMI, LineCode::Manchester};

inline std::string_view to_string(LineCode c) {
  switch (c) {
    case LineCode::UnipolarNRZ: return "unipolar";
    case LineCode::PolarNRZ: return "polar";
    case LineCode::BipolarAMI: return "ami";
    case LineCode::Manchester: return "manchester";
  }
  return "?";
}

inline LineCode parse_line_code(std::string_view s) {
  for (auto c : kAllLineCodes)
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown line code '" + std::string(s) + "'");
}

// Line symbols emitted per input bit.
inline constexpr int chips_per_bit(LineCode c) { return c == LineCode::Manchester ? 2 : 1; }

// Mean squared line level for equiprobable bits.
inline constexpr double mean_symbol_power(LineCode c) {
  return c == LineCode::UnipolarNRZ || c == LineCode::BipolarAMI ? 0.5 : 1.0;
}

// Unipolar 1->+1, 0->0. Polar 1->+1, 0->-1. AMI marks alternate starting at
// +1. Manchester (G.E. Thomas) 1->(+1,-1), 0->(-1,+1), doubling the rate.
inline SymbolStream line_encode(const BitStream& bits, LineCode scheme, double bit_rate_hz = 1000.0) {
  std::vector<double> out;
  out.reserve(bits.size() * static_cast<std::size_t>(chips_per_bit(scheme)));
  double next_mark = 1.0;
  for (auto b : bits) {
    switch (scheme) {
      case LineCode::UnipolarNRZ: out.push_back(b ? 1.0 : 0.0); break;
      case LineCode::PolarNRZ: out.push_back(b ? 1.0 : -1.0); break;
      case LineCode::BipolarAMI:
        if (b) {
          out.push_back(next_mark);
          next_mark = -next_mark;
        } else {
          out.push_back(0.0);
        }
        break;
      case LineCode::Manchester:
        out.push_back(b ? 1.0 : -1.0);
        out.push_back(b ? -1.0 : 1.0);
        break;
    }
  }
  return SymbolStream(std::move(out), bit_rate_hz * chips_per_bit(scheme));
}

struct LineDecodeResult {
  BitStream bits;
  // AMI: marks that repeat the previous mark polarity. Manchester: chip pairs
  // with no mid-bit transition (decoded from the first half).
  std::size_t violations = 0;
};

// Inverse of line_encode for sliced input (amplitudes in the nominal alphabet).
inline LineDecodeResult line_decode(const SymbolStream& symbols, LineCode scheme) {
  const auto& a = symbols.amplitudes;
  LineDecodeResult r;
  switch (scheme) {
    case LineCode::UnipolarNRZ:
      r.bits.reserve(a.size());
      for (double x : a) r.bits.push_back(x > 0.5 ? 1 : 0);
      break;
    case LineCode::PolarNRZ:
      r.bits.reserve(a.size());
      for (double x : a) r.bits.push_back(x > 0.0 ? 1 : 0);
      break;
    case LineCode::BipolarAMI: {
      r.bits.reserve(a.size());
      double last_mark = -1.0;  // first mark is expected to be +1
      for (double x : a) {
        if (std::abs(x) > 0.5) {
          const double pol = x > 0.0 ? 1.0 : -1.0;
          if (pol == last_mark) ++r.violations;
          last_mark = pol;
          r.bits.push_back(1);
        } else {
          r.bits.push_back(0);
        }
      }
      break;
    }
    case LineCode::Manchester:
      if (a.size() % 2 != 0) throw std::invalid_argument("line_decode: Manchester input has odd length");
      r.bits.reserve(a.size() / 2);
      for (std::size_t i = 0; i < a.size(); i += 2) {
        const bool first_high = a[i] > 0.0;
        const bool second_high = a[i + 1] > 0.0;
        if (first_high == second_high) ++r.violations;
        r.bits.push_back(first_high ? 1 : 0);
      }
      break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pulse shaping
// ---------------------------------------------------------------------------

struct PulseShape {
  enum class Kind { Rect, RaisedCosine, RootRaisedCosine };
  Kind kind = Kind::Rect;
  double rolloff = 0.35;
  int span_symbols = 8;

  void validate() const {
    if (kind == Kind::Rect) return;
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("pulse: rolloff must be in (0, 1]");
    if (span_symbols < 4 || span_symbols % 2 != 0)
      throw std::invalid_argument("pulse: span_symbols must be even and >= 4");
  }
};

inline constexpr PulseShape::Kind kAllPulseKinds[] = {PulseShape::Kind::Rect, PulseShape::Kind::RaisedCosine,
                                                      PulseShape::Kind::RootRaisedCosine};

inline std::string_view to_string(PulseShape::Kind k) {
  switch (k) {
    case PulseShape::Kind::Rect: return "rect";
    case PulseShape::Kind::RaisedCosine: return "rc";
    case PulseShape::Kind::RootRaisedCosine: return "rrc";
  }
  return "?";
}

inline PulseShape::Kind parse_pulse_kind(std::string_view s) {
  for (auto k : kAllPulseKinds)
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown pulse shape '" + std::string(s) + "'");
}

namespace detail {
inline void check_nyquist_filter_args(double rolloff, int span, int sps) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("taps: rolloff must be in (0, 1]");
  if (span <= 0 || span % 2 != 0) throw std::invalid_argument("taps: span must be a positive even integer");
  if (sps < 2) throw std::invalid_argument("taps: samples_per_symbol must be >= 2");
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Raised-cosine impulse response at t (in symbol periods), peak 1.
inline double raised_cosine(double t, double beta) {
  const double d = 1.0 - 4.0 * beta * beta * t * t;
  if (std::abs(d) < 1e-10) return (std::numbers::pi / 4.0) * sinc(1.0 / (2.0 * beta));
  return sinc(t) * std::cos(std::numbers::pi * beta * t) / d;
}

// Root-raised-cosine impulse response at t (symbol periods), unit energy
// over continuous time.
inline double root_raised_cosine(double t, double beta) {
  using std::numbers::pi;
  if (t == 0.0) return 1.0 - beta + 4.0 * beta / pi;
  const double x = 4.0 * beta * t;
  if (std::abs(std::abs(x) - 1.0) < 1e-10) {
    const double a = pi / (4.0 * beta);
    return beta / std::numbers::sqrt2 * ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
  }
  return (std::sin(pi * t * (1.0 - beta)) + x * std::cos(pi * t * (1.0 + beta))) / (pi * t * (1.0 - x * x));
}
}  // namespace detail

// Raised-cosine taps over +-span/2 symbols, span*sps + 1 taps, center tap 1.
inline std::vector<double> make_rc_taps(double rolloff, int span_symbols, int samples_per_symbol) {
  detail::check_nyquist_filter_args(rolloff, span_symbols, samples_per_symbol);
  const int half = span_symbols * samples_per_symbol / 2;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (int k = -half; k <= half; ++k) {
    const double t = static_cast<double>(k) / samples_per_symbol;
    taps[static_cast<std::size_t>(k + half)] = detail::raised_cosine(t, rolloff);
  }
  const double center = taps[static_cast<std::size_t>(half)];
  for (auto& h : taps) h /= center;
  return taps;
}

// Root-raised-cosine taps over +-span/2 symbols, normalized to sum(h^2) = 1.
inline std::vector<double> make_rrc_taps(double rolloff, int span_symbols, int samples_per_symbol) {
  detail::check_nyquist_filter_args(rolloff, span_symbols, samples_per_symbol);
  const int half = span_symbols * samples_per_symbol / 2;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  double energy = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double t = static_cast<double>(k) / samples_per_symbol;
    const double h = detail::root_raised_cosine(t, rolloff);
    taps[static_cast<std::size_t>(k + half)] = h;
    energy += h * h;
  }
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& h : taps) h *= scale;
  return taps;
}

inline std::vector<double> shape_taps(const PulseShape& shape, int samples_per_symbol) {
  shape.validate();
  switch (shape.kind) {
    case PulseShape::Kind::Rect: return std::vector<double>(static_cast<std::size_t>(samples_per_symbol), 1.0);
    case PulseShape::Kind::RaisedCosine:
      return make_rc_taps(shape.rolloff, shape.span_symbols, samples_per_symbol);
    case PulseShape::Kind::RootRaisedCosine:
      return make_rrc_taps(shape.rolloff, shape.span_symbols, samples_per_symbol);
  }
  return {};
}

// Filter output paired with the delay the filter introduced.
struct FilteredWaveform {
  Waveform waveform;
  double group_delay_samples = 0.0;
};

// Zero-stuff by sps and convolve with `taps`: y[n] = sum_k a_k h[n - k*sps].
// Output length n_symbols*sps + taps - 1.
inline FilteredWaveform upsample_filter(const SymbolStream& symbols, std::span<const double> taps,
                                        int samples_per_symbol) {
  if (samples_per_symbol < 1) throw std::invalid_argument("pulse_shape: samples_per_symbol must be >= 1");
  if (taps.empty()) throw std::invalid_argument("pulse_shape: empty taps");
  const auto sps = static_cast<std::size_t>(samples_per_symbol);
  const double fs = symbols.symbol_rate_hz * samples_per_symbol;
  if (symbols.amplitudes.empty()) return {Waveform({}, fs), (static_cast<double>(taps.size()) - 1.0) / 2.0};

  std::vector<double> y(symbols.size() * sps + taps.size() - 1, 0.0);
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const double a = symbols.amplitudes[k];
    if (a == 0.0) continue;
    double* dst = y.data() + k * sps;
    for (std::size_t j = 0; j < taps.size(); ++j) dst[j] += a * taps[j];
  }
  return {Waveform(std::move(y), fs), (static_cast<double>(taps.size()) - 1.0) / 2.0};
}

inline FilteredWaveform pulse_shape(const SymbolStream& symbols, const PulseShape& shape, int samples_per_symbol) {
  const auto taps = shape_taps(shape, samples_per_symbol);
  return upsample_filter(symbols, taps, samples_per_symbol);
}

// ---------------------------------------------------------------------------
// Modulation
// ---------------------------------------------------------------------------

struct ModulatorConfig {
  double carrier_freq_hz = 10000.0;
  int samples_per_symbol = 80;
  double sample_rate_hz = 80000.0;
  double carrier_phase_rad = 0.0;

  void validate() const {
    if (!(carrier_freq_hz > 0.0)) throw std::invalid_argument("modulator: carrier frequency must be positive");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("modulator: sample rate must be positive");
    if (samples_per_symbol < 4) throw std::invalid_argument("modulator: samples_per_symbol must be >= 4");
    if (!(carrier_freq_hz < sample_rate_hz / 2.0))
      throw std::invalid_argument("modulator: carrier violates Nyquist (f_c >= f_s/2)");
  }
};

inline double wrap_phase(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi = 0.0;
  return phi;
}

// Phase-accumulator oscillator, phase kept in [0, 2*pi).
class Nco {
 public:
  Nco(double freq_hz, double sample_rate_hz, double phase_rad = 0.0)
      : phase_(wrap_phase(phase_rad)), step_(kTwoPi * freq_hz / sample_rate_hz) {}

  double phase() const noexcept { return phase_; }
  double step() const noexcept { return step_; }

  // cos of the current phase, then advance one sample.
  double next_cos() noexcept {
    const double c = std::cos(phase_);
    advance(step_);
    return c;
  }

  void advance(double delta) noexcept {
    phase_ += delta;
    if (phase_ >= kTwoPi || phase_ < 0.0) phase_ = wrap_phase(phase_);
  }

 private:
  double phase_;
  double step_;
};

// s[n] = a[n] cos(2 pi (f_c + df) n / f_s + phi0 + phi_off). The offsets model
// carrier mismatch between transmitter and receiver.
inline Waveform bpsk_modulate(const Waveform& baseband, const ModulatorConfig& cfg, double phase_offset_rad = 0.0,
                              double freq_offset_hz = 0.0) {
  cfg.validate();
  const double f = cfg.carrier_freq_hz + freq_offset_hz;
  if (!(std::abs(f) < cfg.sample_rate_hz / 2.0))
    throw std::invalid_argument("bpsk_modulate: carrier plus offset violates Nyquist");
  Nco nco(f, cfg.sample_rate_hz, cfg.carrier_phase_rad + phase_offset_rad);
  std::vector<double> s(baseband.size());
  for (std::size_t n = 0; n < s.size(); ++n) s[n] = baseband.samples[n] * nco.next_cos();
  return Waveform(std::move(s), cfg.sample_rate_hz);
}

// Two-input multiplexer transmitter: each sample selects the carrier (bit 1)
// or the inverted carrier (bit 0) from precomputed tables. Equivalent to
// bpsk_modulate on a rect-shaped polar baseband.
inline Waveform mux_modulate(const BitStream& bits, const ModulatorConfig& cfg, double phase_offset_rad = 0.0,
                             double freq_offset_hz = 0.0) {
  cfg.validate();
  const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
  const std::size_t n = bits.size() * sps;
  Nco nco(cfg.carrier_freq_hz + freq_offset_hz, cfg.sample_rate_hz, cfg.carrier_phase_rad + phase_offset_rad);
  std::vector<double> carrier(n), inverted(n);
  for (std::size_t i = 0; i < n; ++i) {
    carrier[i] = nco.next_cos();
    inverted[i] = -carrier[i];
  }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = bits[i / sps] ? carrier[i] : inverted[i];
  return Waveform(std::move(s), cfg.sample_rate_hz);
}

}  // namespace scmodem

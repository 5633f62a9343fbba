#pragma once

// AWGN channel calibrated in Eb/N0 and the receiver front-end quantizer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "scmodem/signal_core.hpp"

namespace scmodem {

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct ChannelConfig {
  double ebn0_db = kNoiseless;  // +inf disables noise
  double carrier_phase_offset_rad = 0.0;
  double carrier_freq_offset_hz = 0.0;
  double gain = 1.0;
  RngStream rng{};

  bool noiseless() const noexcept { return ebn0_db == kNoiseless; }

  void validate() const {
    if (!(gain > 0.0) || !std::isfinite(gain)) throw std::invalid_argument("channel: gain must be positive");
    if (!std::isfinite(ebn0_db) && !noiseless()) throw std::invalid_argument("channel: ebn0_db must be finite or +inf");
    if (!std::isfinite(carrier_phase_offset_rad) || !std::isfinite(carrier_freq_offset_hz))
      throw std::invalid_argument("channel: offsets must be finite");
  }
};

struct AdcConfig {
  int n_bits = 12;
  double full_scale = 8.0;
  bool enabled = false;

  void validate() const {
    if (n_bits < 1 || n_bits > 24) throw std::invalid_argument("adc: n_bits must be in [1, 24]");
    if (!(full_scale > 0.0)) throw std::invalid_argument("adc: full_scale must be positive");
  }
  double step() const noexcept { return 2.0 * full_scale / std::ldexp(1.0, n_bits); }
};

// Eb = (sum s[n]^2 / f_s) / n_bits_carried.
inline double measure_eb(const Waveform& waveform, std::size_t n_bits_carried) {
  if (n_bits_carried == 0) throw std::invalid_argument("measure_eb: zero bits carried");
  double e = 0.0;
  for (double s : waveform.samples) e += s * s;
  return e / waveform.sample_rate_hz / static_cast<double>(n_bits_carried);
}

// Noise variance per sample for a real passband signal: (N0/2) * f_s.
inline double awgn_sigma2(double eb, double ebn0_db, double gain, double sample_rate_hz) {
  const double n0 = gain * gain * eb / db_to_linear(ebn0_db);
  return 0.5 * n0 * sample_rate_hz;
}

// y[n] = gain*s[n] + w[n], w ~ N(0, (N0/2) f_s), N0 = gain^2 eb / (Eb/N0).
// Draws come from cfg.rng, which is advanced in place.
inline Waveform awgn_apply(const Waveform& waveform, ChannelConfig& cfg, double eb) {
  cfg.validate();
  std::vector<double> y(waveform.size());
  if (cfg.noiseless()) {
    for (std::size_t n = 0; n < y.size(); ++n) y[n] = cfg.gain * waveform.samples[n];
    return Waveform(std::move(y), waveform.sample_rate_hz);
  }
  if (!std::isfinite(eb)) throw std::invalid_argument("awgn_apply: non-finite Eb");
  if (!(eb > 0.0)) throw std::invalid_argument("awgn_apply: Eb must be positive for a noisy channel");
  const double sigma = std::sqrt(awgn_sigma2(eb, cfg.ebn0_db, cfg.gain, waveform.sample_rate_hz));
  for (std::size_t n = 0; n < y.size(); ++n) y[n] = cfg.gain * waveform.samples[n] + sigma * cfg.rng.gaussian();
  return Waveform(std::move(y), waveform.sample_rate_hz);
}

// Const overload: draws from a copy of the configured stream.
inline Waveform awgn_apply(const Waveform& waveform, const ChannelConfig& cfg, double eb) {
  ChannelConfig local = cfg;
  return awgn_apply(waveform, local, eb);
}

// Uniform midrise quantizer with saturation; no zero output level.
inline double adc_quantize_sample(double x, const AdcConfig& cfg) {
  const double delta = cfg.step();
  const double half = std::ldexp(1.0, cfg.n_bits - 1);
  const double code = std::clamp(std::floor(x / delta), -half, half - 1.0);
  return (code + 0.5) * delta;
}

inline Waveform adc_quantize(const Waveform& waveform, const AdcConfig& cfg) {
  cfg.validate();
  std::vector<double> y(waveform.size());
  for (std::size_t n = 0; n < y.size(); ++n) y[n] = adc_quantize_sample(waveform.samples[n], cfg);
  return Waveform(std::move(y), waveform.sample_rate_hz);
}

}  // namespace scmodem

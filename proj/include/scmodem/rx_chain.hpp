#pragma once

// Receiver: Costas-loop carrier recovery, matched filtering, symbol decision
// and resolution of the 180 degree BPSK phase ambiguity.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "scmodem/signal_core.hpp"
#include "scmodem/tx_chain.hpp"

namespace scmodem {

// ---------------------------------------------------------------------------
// Loop design
// ---------------------------------------------------------------------------

struct LoopGains {
  double kp = 0.0;
  double ki = 0.0;
};

// Second-order PI loop gains from the normalized noise bandwidth Bn*T (T is
// the symbol period) and damping zeta. With theta = Bn*Ts / (zeta + 1/(4 zeta))
// per sample and d = 1 + 2 zeta theta + theta^2:
//   kp = 4 zeta theta / (d Kd),   ki = 4 theta^2 / (d Kd).
// The detector gain Kd is the slope of e = I*Q at lock, which is A^2 for a
// signal of mean power A^2 (e = (A^2/2) sin 2 dtheta). The NCO gain is 1 rad
// per unit. Inverting, omega_n Ts ~= sqrt(Kd ki) and zeta ~= kp Kd / (2 omega_n Ts).
inline LoopGains design_loop_gains(double bn_t, double zeta, int samples_per_symbol, double detector_gain = 1.0) {
  if (!(bn_t > 0.0) || !(zeta > 0.0) || samples_per_symbol < 1 || !(detector_gain > 0.0))
    throw std::invalid_argument("design_loop_gains: parameters must be positive");
  const double bn_ts = bn_t / samples_per_symbol;
  const double theta = bn_ts / (zeta + 1.0 / (4.0 * zeta));
  const double d = 1.0 + 2.0 * zeta * theta + theta * theta;
  return {4.0 * zeta * theta / (d * detector_gain), 4.0 * theta * theta / (d * detector_gain)};
}

// Damping implied by a pair of gains (small-angle approximation above).
inline double loop_damping(const LoopGains& g, double detector_gain = 1.0) {
  const double wn = std::sqrt(detector_gain * g.ki);
  return g.kp * detector_gain / (2.0 * wn);
}

// Blackman-windowed sinc low-pass, unity DC gain. The Blackman window keeps
// the 2*f_c mixing product well below 1e-3 in the arms.
inline std::vector<double> design_arm_filter(double cutoff_hz, double sample_rate_hz, int n_taps = 33) {
  if (n_taps < 1 || n_taps % 2 == 0) throw std::invalid_argument("arm filter: n_taps must be odd");
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0))
    throw std::invalid_argument("arm filter: cutoff must be in (0, f_s/2)");
  const double fc = cutoff_hz / sample_rate_hz;
  const int mid = n_taps / 2;
  std::vector<double> h(static_cast<std::size_t>(n_taps));
  double sum = 0.0;
  for (int n = 0; n < n_taps; ++n) {
    const double w = n_taps == 1 ? 1.0
                                 : 0.42 - 0.5 * std::cos(kTwoPi * n / (n_taps - 1)) +
                                       0.08 * std::cos(2.0 * kTwoPi * n / (n_taps - 1));
    h[static_cast<std::size_t>(n)] = 2.0 * fc * detail::sinc(2.0 * fc * (n - mid)) * w;
    sum += h[static_cast<std::size_t>(n)];
  }
  for (auto& x : h) x /= sum;
  return h;
}

// ---------------------------------------------------------------------------
// Costas loop
// ---------------------------------------------------------------------------

struct CostasConfig {
  double nominal_carrier_hz = 10000.0;
  double sample_rate_hz = 80000.0;
  std::vector<double> arm_filter_taps;
  double loop_kp = 0.0;
  double loop_ki = 0.0;
  std::size_t settle_symbols = 500;
  double initial_phase_rad = 0.0;

  void validate() const {
    if (!(nominal_carrier_hz > 0.0)) throw std::invalid_argument("costas: nominal carrier must be positive");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("costas: sample rate must be positive");
    if (arm_filter_taps.empty()) throw std::invalid_argument("costas: arm filter taps are empty");
    if (!(loop_kp >= 0.0) || !(loop_ki >= 0.0)) throw std::invalid_argument("costas: loop gains must be >= 0");
  }

  double arm_group_delay() const noexcept { return (static_cast<double>(arm_filter_taps.size()) - 1.0) / 2.0; }
};

// Defaults: 33-tap arm filters with cutoff 1.5x the symbol rate, loop gains
// for Bn*T = 0.02 and zeta = 0.707 at unit signal power.
inline CostasConfig default_costas_config(double carrier_hz, double sample_rate_hz, double symbol_rate_hz) {
  CostasConfig c;
  c.nominal_carrier_hz = carrier_hz;
  c.sample_rate_hz = sample_rate_hz;
  c.arm_filter_taps = design_arm_filter(1.5 * symbol_rate_hz, sample_rate_hz, 33);
  const auto sps = static_cast<int>(std::lround(sample_rate_hz / symbol_rate_hz));
  const auto g = design_loop_gains(0.02, 0.707, sps);
  c.loop_kp = g.kp;
  c.loop_ki = g.ki;
  return c;
}

struct CostasState {
  double nco_phase_rad = 0.0;
  double integrator = 0.0;
  FirFilter i_arm;
  FirFilter q_arm;

  static CostasState zeroed(const CostasConfig& cfg) {
    CostasState s;
    s.nco_phase_rad = wrap_phase(cfg.initial_phase_rad);
    s.i_arm = FirFilter(cfg.arm_filter_taps);
    s.q_arm = FirFilter(cfg.arm_filter_taps);
    return s;
  }
};

struct CostasStepOutput {
  double i_out = 0.0;
  double q_out = 0.0;
  double phase_error = 0.0;
};

// One sample through the loop: mix with 2cos(theta) and -2sin(theta), low-pass
// both arms, e = I*Q, integrator += ki e, theta += 2 pi f/f_s + kp e + integrator.
inline CostasStepOutput costas_step(CostasState& state, double sample, const CostasConfig& cfg) {
  if (!std::isfinite(sample)) throw std::invalid_argument("costas_step: non-finite input sample");
  const double theta = state.nco_phase_rad;
  const double i_f = state.i_arm.push(2.0 * sample * std::cos(theta));
  const double q_f = state.q_arm.push(-2.0 * sample * std::sin(theta));
  const double e = i_f * q_f;
  state.integrator += cfg.loop_ki * e;
  state.nco_phase_rad =
      wrap_phase(theta + kTwoPi * cfg.nominal_carrier_hz / cfg.sample_rate_hz + cfg.loop_kp * e + state.integrator);
  return {i_f, q_f, e};
}

struct CostasRunResult {
  Waveform i_baseband;
  Waveform q_baseband;
  Waveform phase_trace;             // e[n], the loop's phase-error signal
  std::vector<double> nco_phase;    // theta used for sample n
  double group_delay_samples = 0.0;  // arm filter delay
};

inline CostasRunResult costas_run(const Waveform& passband, const CostasConfig& cfg) {
  cfg.validate();
  if (passband.empty()) throw std::invalid_argument("costas_run: empty waveform");
  auto state = CostasState::zeroed(cfg);
  const std::size_t n = passband.size();
  std::vector<double> i(n), q(n), e(n), ph(n);
  for (std::size_t k = 0; k < n; ++k) {
    ph[k] = state.nco_phase_rad;
    const auto out = costas_step(state, passband.samples[k], cfg);
    i[k] = out.i_out;
    q[k] = out.q_out;
    e[k] = out.phase_error;
  }
  const double fs = passband.sample_rate_hz;
  return {Waveform(std::move(i), fs), Waveform(std::move(q), fs), Waveform(std::move(e), fs), std::move(ph),
          cfg.arm_group_delay()};
}

// Ideal coherent demodulation: multiply by 2cos of the nominal carrier. The
// matched filter that follows removes the 2*f_c product.
inline Waveform coherent_mix(const Waveform& passband, double carrier_hz, double phase_rad = 0.0) {
  Nco nco(carrier_hz, passband.sample_rate_hz, phase_rad);
  std::vector<double> y(passband.size());
  for (std::size_t n = 0; n < y.size(); ++n) y[n] = 2.0 * passband.samples[n] * nco.next_cos();
  return Waveform(std::move(y), passband.sample_rate_hz);
}

// ---------------------------------------------------------------------------
// Matched filter
// ---------------------------------------------------------------------------

inline double energy(std::span<const double> taps) {
  double e = 0.0;
  for (double h : taps) e += h * h;
  return e;
}

// Convolution with the time-reversed pulse, scaled by 1/energy so an isolated
// clean pulse peaks at its symbol amplitude. The reported group delay is that
// of the shaping + matched cascade, taps - 1 samples.
inline FilteredWaveform matched_filter(const Waveform& baseband, std::span<const double> pulse_taps) {
  if (pulse_taps.empty()) throw std::invalid_argument("matched_filter: empty taps");
  const double e = energy(pulse_taps);
  if (!(e > 0.0)) throw std::invalid_argument("matched_filter: zero-energy taps");
  std::vector<double> reversed(pulse_taps.rbegin(), pulse_taps.rend());
  for (auto& h : reversed) h /= e;
  auto y = convolve(baseband.samples, reversed);
  return {Waveform(std::move(y), baseband.sample_rate_hz), static_cast<double>(pulse_taps.size()) - 1.0};
}

// Matched filter output evaluated only at the given output indices. Equals
// matched_filter(...).waveform.samples[idx] for each idx.
inline std::vector<double> matched_filter_at(std::span<const double> x, std::span<const double> pulse_taps,
                                             std::span<const std::size_t> indices) {
  if (pulse_taps.empty()) throw std::invalid_argument("matched_filter: empty taps");
  const double inv_e = 1.0 / energy(pulse_taps);
  const std::size_t L = pulse_taps.size();
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t n : indices) {
    // z[n] = sum_m taps[m] x[n - L + 1 + m]
    double acc = 0.0;
    for (std::size_t m = 0; m < L; ++m) {
      const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(n + m) - static_cast<std::ptrdiff_t>(L - 1);
      if (j < 0) continue;
      if (static_cast<std::size_t>(j) >= x.size()) break;
      acc += pulse_taps[m] * x[static_cast<std::size_t>(j)];
    }
    out.push_back(acc * inv_e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decision
// ---------------------------------------------------------------------------

struct DecisionConfig {
  int samples_per_symbol = 1;
  std::size_t sampling_offset = 0;
  double threshold = 0.0;
  LineCode scheme = LineCode::PolarNRZ;
};

// Nearest nominal level of the line code. Ties go to the nonzero level: polar
// and Manchester slice at `threshold` (x == threshold -> +1), unipolar at
// 0.5 + threshold, AMI at +-0.5.
inline double slice_symbol(double x, LineCode scheme, double threshold = 0.0) {
  switch (scheme) {
    case LineCode::PolarNRZ:
    case LineCode::Manchester: return x >= threshold ? 1.0 : -1.0;
    case LineCode::UnipolarNRZ: return x >= 0.5 + threshold ? 1.0 : 0.0;
    case LineCode::BipolarAMI:
      if (x >= 0.5) return 1.0;
      if (x <= -0.5) return -1.0;
      return 0.0;
  }
  return 0.0;
}

// Samples at offset + k*sps, k = 0, 1, ... while in range.
inline SymbolStream symbol_decide(const Waveform& filtered, const DecisionConfig& cfg) {
  if (cfg.samples_per_symbol < 1) throw std::invalid_argument("symbol_decide: samples_per_symbol must be >= 1");
  if (cfg.sampling_offset >= filtered.size())
    throw std::invalid_argument("symbol_decide: sampling offset outside waveform");
  const auto sps = static_cast<std::size_t>(cfg.samples_per_symbol);
  std::vector<double> out;
  out.reserve((filtered.size() - cfg.sampling_offset + sps - 1) / sps);
  for (std::size_t n = cfg.sampling_offset; n < filtered.size(); n += sps)
    out.push_back(slice_symbol(filtered.samples[n], cfg.scheme, cfg.threshold));
  return SymbolStream(std::move(out), filtered.sample_rate_hz / cfg.samples_per_symbol);
}

// ---------------------------------------------------------------------------
// Phase ambiguity
// ---------------------------------------------------------------------------

// 0xA5C3, MSB first.
inline BitStream default_preamble() {
  return {1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 0, 0, 1, 1};
}

struct AmbiguityResult {
  BitStream payload;
  bool inverted = false;
  bool low_confidence = false;  // exactly half of the preamble mismatched
  std::size_t mismatches = 0;
};

// Majority vote over the preamble: more than half mismatched means the loop
// locked at pi, so every bit is flipped. The preamble is stripped.
inline AmbiguityResult resolve_phase_ambiguity(const BitStream& decided, const BitStream& preamble) {
  if (preamble.size() < 8) throw std::invalid_argument("resolve_phase_ambiguity: preamble shorter than 8 bits");
  if (decided.size() < preamble.size())
    throw std::invalid_argument("resolve_phase_ambiguity: decided stream shorter than preamble");
  AmbiguityResult r;
  for (std::size_t i = 0; i < preamble.size(); ++i) r.mismatches += decided[i] != preamble[i];
  r.inverted = 2 * r.mismatches > preamble.size();
  r.low_confidence = 2 * r.mismatches == preamble.size();
  r.payload.reserve(decided.size() - preamble.size());
  for (std::size_t i = preamble.size(); i < decided.size(); ++i)
    r.payload.push_back(r.inverted ? 1 - decided[i] : decided[i]);
  return r;
}

}  // namespace scmodem

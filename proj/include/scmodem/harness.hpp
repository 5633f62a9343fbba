#pragma once

// End-to-end chain assembly, error counting and Monte-Carlo BER sweeps.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "scmodem/channel_adc.hpp"
#include "scmodem/rx_chain.hpp"
#include "scmodem/signal_core.hpp"
#include "scmodem/tx_chain.hpp"

namespace scmodem {

// Receiver options when the Costas loop replaces ideal coherent demodulation.
struct CostasOptions {
  double bn_t = 0.02;
  double zeta = 0.707;
  std::optional<double> kp;  // override the designed gains
  std::optional<double> ki;
  int arm_taps = 33;
  double arm_cutoff_factor = 1.5;  // times the line-symbol rate
  double initial_phase_rad = 0.0;
};

struct SimConfig {
  double symbol_rate_hz = 1000.0;
  double carrier_freq_hz = 10000.0;
  double sample_rate_hz = 80000.0;
  LineCode line_code = LineCode::PolarNRZ;
  PulseShape pulse{};
  ChannelConfig channel{};
  AdcConfig adc{};
  std::optional<CostasOptions> costas;  // empty: ideal coherent demodulation
  std::size_t n_bits = 10000;
  std::uint64_t seed = 1;
  BitStream preamble = default_preamble();
  std::size_t settle_symbols = 500;

  int samples_per_symbol() const { return static_cast<int>(std::lround(sample_rate_hz / symbol_rate_hz)); }
  int samples_per_line_symbol() const { return samples_per_symbol() / chips_per_bit(line_code); }

  void validate() const {
    if (!(symbol_rate_hz > 0.0) || !(sample_rate_hz > 0.0))
      throw std::invalid_argument("config: rates must be positive");
    const double ratio = sample_rate_hz / symbol_rate_hz;
    if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9)
      throw std::invalid_argument("config: sample_rate_hz / symbol_rate_hz must be a positive integer");
    if (samples_per_symbol() % chips_per_bit(line_code) != 0)
      throw std::invalid_argument("config: samples per symbol must be even for Manchester");
    if (samples_per_line_symbol() < 4) throw std::invalid_argument("config: fewer than 4 samples per line symbol");
    if (!(carrier_freq_hz > 0.0 && carrier_freq_hz < sample_rate_hz / 2.0))
      throw std::invalid_argument("config: carrier_freq_hz must be in (0, sample_rate_hz/2)");
    if (preamble.size() < 8) throw std::invalid_argument("config: preamble must have at least 8 bits");
    pulse.validate();
    channel.validate();
    if (adc.enabled) adc.validate();
  }
};

// Costas loop configuration for a chain. Loop gains use Bn*T with T the bit
// period and the detector gain of the line code's mean power; arm cutoff
// scales with the line-symbol rate.
inline CostasConfig build_costas_config(const SimConfig& cfg) {
  const CostasOptions opt = cfg.costas.value_or(CostasOptions{});
  CostasConfig c;
  c.nominal_carrier_hz = cfg.carrier_freq_hz;
  c.sample_rate_hz = cfg.sample_rate_hz;
  const double line_rate = cfg.symbol_rate_hz * chips_per_bit(cfg.line_code);
  c.arm_filter_taps = design_arm_filter(opt.arm_cutoff_factor * line_rate, cfg.sample_rate_hz, opt.arm_taps);
  const auto g = design_loop_gains(opt.bn_t, opt.zeta, cfg.samples_per_symbol(), mean_symbol_power(cfg.line_code));
  c.loop_kp = opt.kp.value_or(g.kp);
  c.loop_ki = opt.ki.value_or(g.ki);
  c.settle_symbols = cfg.settle_symbols;
  c.initial_phase_rad = opt.initial_phase_rad;
  return c;
}

// Transmit pulse scaled to sum(h^2) = samples per line symbol, so every shape
// carries the mean power of a unit rect pulse. Loop gains assume that level.
inline std::vector<double> chain_pulse_taps(const SimConfig& cfg) {
  const int sps = cfg.samples_per_line_symbol();
  auto taps = shape_taps(cfg.pulse, sps);
  const double scale = std::sqrt(static_cast<double>(sps) / energy(taps));
  for (auto& h : taps) h *= scale;
  return taps;
}

struct ChainDiagnostics {
  bool inverted = false;
  bool low_confidence = false;
  std::size_t preamble_mismatches = 0;
  std::size_t line_code_violations = 0;
  double eb = 0.0;                 // measured at the transmitter
  double measured_ebn0_db = kNoiseless;  // from the realized noise
  std::size_t sampling_offset = 0;  // first decision index (line symbol 0)
  std::size_t samples_per_line_symbol = 0;
  std::optional<Waveform> phase_trace;  // Costas e[n]
  std::optional<std::vector<double>> nco_phase;
  std::optional<Waveform> tx_passband;   // kept when requested
};

struct ChainResult {
  BitStream tx_bits;
  BitStream rx_bits;
  ChainDiagnostics diagnostics;
};

struct ChainOptions {
  bool keep_traces = false;  // phase trace and NCO phase
  bool keep_passband = false;
};

namespace detail {
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline std::uint32_t payload_seed(const RngStream& rng) {
  auto r = rng.fork(0x5041594CULL);  // "PAYL"
  std::uint32_t s = 0;
  while (s == 0) s = static_cast<std::uint32_t>(r.next_u64() & 0x7FFFFFu);
  return s;
}
}  // namespace detail

// Frame on air: [settle filler, line coded][preamble, polar chips][payload,
// line coded]. The filler lets the loop acquire and is discarded; the
// preamble is sent as polar chips for every line code so its polarity is
// observable, and decides the phase ambiguity.
inline ChainResult run_chain(const SimConfig& cfg, const ChainOptions& opts = {}) {
  detail::stage("config", [&] { cfg.validate(); return 0; });

  const int sps_line = cfg.samples_per_line_symbol();
  const int chips = chips_per_bit(cfg.line_code);
  const double line_rate = cfg.symbol_rate_hz * chips;

  ChainResult result;
  auto& diag = result.diagnostics;

  // Transmitter.
  const auto all_bits = detail::stage("prbs", [&] {
    return prbs_generate(23, detail::payload_seed(cfg.channel.rng), cfg.settle_symbols + cfg.n_bits);
  });
  const auto filler = all_bits.slice(0, cfg.settle_symbols);
  result.tx_bits = all_bits.slice(cfg.settle_symbols, cfg.n_bits);

  const auto symbols = detail::stage("line-encode", [&] {
    auto fill = line_encode(filler, cfg.line_code, cfg.symbol_rate_hz).amplitudes;
    auto pay = line_encode(result.tx_bits, cfg.line_code, cfg.symbol_rate_hz).amplitudes;
    std::vector<double> a;
    a.reserve(fill.size() + cfg.preamble.size() + pay.size());
    a.insert(a.end(), fill.begin(), fill.end());
    for (auto b : cfg.preamble) a.push_back(b ? 1.0 : -1.0);
    a.insert(a.end(), pay.begin(), pay.end());
    return SymbolStream(std::move(a), line_rate);
  });
  const std::size_t n_fill = filler.size() * static_cast<std::size_t>(chips);
  const std::size_t n_pre = cfg.preamble.size();
  const std::size_t n_line = symbols.size();

  const auto taps = chain_pulse_taps(cfg);
  auto baseband = detail::stage("pulse-shape", [&] { return upsample_filter(symbols, taps, sps_line); });

  ModulatorConfig mod;
  mod.carrier_freq_hz = cfg.carrier_freq_hz;
  mod.sample_rate_hz = cfg.sample_rate_hz;
  mod.samples_per_symbol = sps_line;
  auto passband = detail::stage("modulate", [&] {
    return bpsk_modulate(baseband.waveform, mod, cfg.channel.carrier_phase_offset_rad,
                         cfg.channel.carrier_freq_offset_hz);
  });
  baseband = {};

  // Channel and front end.
  const double bit_periods = static_cast<double>(n_line) / chips;
  diag.eb = detail::stage("measure-eb", [&] {
    return measure_eb(passband, n_line) * static_cast<double>(n_line) / bit_periods;
  });
  auto channel = cfg.channel;
  auto received = detail::stage("channel", [&] { return awgn_apply(passband, channel, diag.eb); });
  if (!channel.noiseless()) {
    double noise = 0.0;
    for (std::size_t n = 0; n < received.size(); ++n) {
      const double w = received.samples[n] - channel.gain * passband.samples[n];
      noise += w * w;
    }
    const double n0 = 2.0 * noise / static_cast<double>(received.size()) / cfg.sample_rate_hz;
    diag.measured_ebn0_db = 10.0 * std::log10(channel.gain * channel.gain * diag.eb / n0);
  }
  if (opts.keep_passband) diag.tx_passband = std::move(passband);
  passband = {};
  if (cfg.adc.enabled) received = detail::stage("adc", [&] { return adc_quantize(received, cfg.adc); });

  // Carrier recovery.
  Waveform demod;
  double demod_delay = 0.0;
  if (cfg.costas) {
    const auto cc = detail::stage("costas", [&] { return build_costas_config(cfg); });
    auto run = detail::stage("costas", [&] { return costas_run(received, cc); });
    demod = std::move(run.i_baseband);
    demod_delay = run.group_delay_samples;
    if (opts.keep_traces) {
      diag.phase_trace = std::move(run.phase_trace);
      diag.nco_phase = std::move(run.nco_phase);
    }
  } else {
    demod = detail::stage("demodulate", [&] { return coherent_mix(received, cfg.carrier_freq_hz); });
  }
  received = {};

  // Matched filter, evaluated at the symbol instants after the filler.
  const auto offset = static_cast<std::size_t>(std::lround(static_cast<double>(taps.size() - 1) + demod_delay));
  diag.sampling_offset = offset;
  diag.samples_per_line_symbol = static_cast<std::size_t>(sps_line);
  std::vector<std::size_t> instants;
  instants.reserve(n_line - n_fill);
  for (std::size_t j = n_fill; j < n_line; ++j) instants.push_back(offset + j * static_cast<std::size_t>(sps_line));
  auto soft = detail::stage("matched-filter", [&] {
    if (instants.back() >= demod.size() + taps.size() - 1)
      throw std::invalid_argument("sampling instant beyond filtered waveform");
    return matched_filter_at(demod.samples, taps, instants);
  });

  // Phase ambiguity from the polarity of preamble + payload chips.
  const auto amb = detail::stage("ambiguity", [&] {
    BitStream polarity;
    polarity.reserve(soft.size());
    for (double v : soft) polarity.push_back(v >= 0.0 ? 1 : 0);
    return resolve_phase_ambiguity(polarity, cfg.preamble);
  });
  diag.inverted = amb.inverted;
  diag.low_confidence = amb.low_confidence;
  diag.preamble_mismatches = amb.mismatches;

  const auto decided = detail::stage("decide", [&] {
    std::vector<double> pay(soft.begin() + static_cast<std::ptrdiff_t>(n_pre), soft.end());
    if (amb.inverted)
      for (auto& v : pay) v = -v;
    DecisionConfig dc;
    dc.samples_per_symbol = 1;
    dc.scheme = cfg.line_code;
    return symbol_decide(Waveform(std::move(pay), line_rate), dc);
  });
  auto decoded = detail::stage("line-decode", [&] { return line_decode(decided, cfg.line_code); });
  result.rx_bits = std::move(decoded.bits);
  diag.line_code_violations = decoded.violations;
  return result;
}

// ---------------------------------------------------------------------------
// Error counting
// ---------------------------------------------------------------------------

struct BerResult {
  double ebn0_db = 0.0;
  std::uint64_t bits_compared = 0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool inverted = false;
  double wall_time_s = 0.0;
  bool ok = true;     // false when a chain stage failed for this point
  std::string error;  // stage-identified message when !ok
};

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

inline Interval wilson_interval(std::uint64_t errors, std::uint64_t n, double z = kZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(errors) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, std::min(p, center - half)), std::min(1.0, std::max(p, center + half))};
}

inline void finalize(BerResult& r) {
  r.ber = r.bits_compared ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits_compared) : 0.0;
  const auto ci = wilson_interval(r.bit_errors, r.bits_compared);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
}

// Hamming distance after dropping `discard_prefix` bits from both streams.
inline BerResult count_errors(const BitStream& tx, const BitStream& rx, std::size_t discard_prefix = 0) {
  if (tx.size() != rx.size())
    throw std::invalid_argument("count_errors: stream lengths differ (" + std::to_string(tx.size()) + " vs " +
                                std::to_string(rx.size()) + ")");
  if (discard_prefix > tx.size()) throw std::invalid_argument("count_errors: prefix longer than streams");
  BerResult r;
  for (std::size_t i = discard_prefix; i < tx.size(); ++i) r.bit_errors += tx[i] != rx[i];
  r.bits_compared = tx.size() - discard_prefix;
  finalize(r);
  return r;
}

// theory within `k` Wilson half-widths of the estimate, on the matching side.
inline bool within_wilson(const BerResult& r, double theory, double k = 3.0) {
  const double lo = r.ber - k * (r.ber - r.ci_low);
  const double hi = r.ber + k * (r.ci_high - r.ber);
  return theory >= lo && theory <= hi;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::uint64_t min_errors = 100;
  std::uint64_t max_bits = 100'000'000;
  std::size_t batch_bits = 50'000;
  unsigned threads = 0;  // 0: SCMODEM_THREADS, else hardware concurrency
};

inline unsigned sweep_threads(unsigned requested) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("SCMODEM_THREADS"); env && *env) {
      const long v = std::strtol(env, nullptr, 10);
      n = v > 0 ? static_cast<unsigned>(v) : 0;
    }
  }
  return n == 0 ? hw : n;
}

namespace detail {
struct BatchOutcome {
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  bool inverted = false;
  std::string error;
};

inline BatchOutcome run_batch(const SimConfig& base, double ebn0_db, const RngStream& point_rng, std::uint64_t batch,
                              std::uint64_t n_bits) {
  BatchOutcome out;
  try {
    SimConfig cfg = base;
    cfg.channel.ebn0_db = ebn0_db;
    cfg.channel.rng = point_rng.fork(batch);
    cfg.n_bits = n_bits;
    const auto chain = run_chain(cfg);
    const auto r = count_errors(chain.tx_bits, chain.rx_bits);
    out.bits = r.bits_compared;
    out.errors = r.bit_errors;
    out.inverted = chain.diagnostics.inverted;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}
}  // namespace detail

// Each point i draws from RngStream(seed, i); batch b of that point from its
// fork(b). Batches run `threads` at a time but are accumulated in index order
// and the stop rule is checked after each one, so results do not depend on
// the thread count.
inline std::vector<BerResult> ber_sweep(const SimConfig& cfg, const std::vector<double>& ebn0_list,
                                        const SweepOptions& opt = {}) {
  if (ebn0_list.empty()) throw std::invalid_argument("ber_sweep: empty Eb/N0 list");
  if (opt.min_errors < 10) throw std::invalid_argument("ber_sweep: min_errors must be >= 10");
  if (opt.max_bits == 0 || opt.batch_bits == 0) throw std::invalid_argument("ber_sweep: max_bits and batch_bits must be > 0");
  const unsigned threads = sweep_threads(opt.threads);

  std::vector<BerResult> results;
  results.reserve(ebn0_list.size());
  for (std::size_t i = 0; i < ebn0_list.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    BerResult r;
    r.ebn0_db = ebn0_list[i];
    const RngStream point_rng(cfg.seed, i);
    const std::uint64_t n_batches = (opt.max_bits + opt.batch_bits - 1) / opt.batch_bits;
    bool done = false;
    for (std::uint64_t wave = 0; wave < n_batches && !done; wave += threads) {
      const std::uint64_t count = std::min<std::uint64_t>(threads, n_batches - wave);
      std::vector<detail::BatchOutcome> outcomes(count);
      auto work = [&](std::uint64_t k) {
        const std::uint64_t b = wave + k;
        const std::uint64_t bits = std::min<std::uint64_t>(opt.batch_bits, opt.max_bits - b * opt.batch_bits);
        outcomes[k] = detail::run_batch(cfg, r.ebn0_db, point_rng, b, bits);
      };
      if (count == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(count);
        for (std::uint64_t k = 0; k < count; ++k) pool.emplace_back(work, k);
        for (auto& t : pool) t.join();
      }
      for (const auto& o : outcomes) {
        if (!o.error.empty()) {
          r.ok = false;
          r.error = o.error;
          done = true;
          break;
        }
        r.bits_compared += o.bits;
        r.bit_errors += o.errors;
        r.inverted = r.inverted || o.inverted;
        if (r.bit_errors >= opt.min_errors || r.bits_compared >= opt.max_bits) {
          done = true;
          break;
        }
      }
    }
    finalize(r);
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(std::move(r));
  }
  return results;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt_g(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f.flush()) throw std::runtime_error("write to '" + path.string() + "' failed");
}
}  // namespace detail

inline std::string format_ber_csv(const std::vector<BerResult>& results) {
  if (results.empty()) throw std::invalid_argument("emit_csv: no results");
  std::string out = "ebn0_db,bits,errors,ber_sim,ci_low,ci_high,ber_theory\n";
  for (const auto& r : results) {
    out += detail::fmt_g(r.ebn0_db, 12) + ',' + std::to_string(r.bits_compared) + ',' + std::to_string(r.bit_errors) +
           ',' + detail::fmt_g(r.ber, 12) + ',' + detail::fmt_g(r.ci_low, 12) + ',' + detail::fmt_g(r.ci_high, 12) +
           ',' + detail::fmt_g(theoretical_ber_bpsk(r.ebn0_db), 12) + '\n';
  }
  return out;
}

inline void emit_csv(const std::vector<BerResult>& results, const std::filesystem::path& destination) {
  detail::write_file(destination, format_ber_csv(results));
}

// One tap per line, 17 significant digits.
inline std::string format_taps_csv(std::span<const double> taps) {
  std::string out;
  for (double t : taps) out += detail::fmt_g(t, 17) + '\n';
  return out;
}

inline std::string format_phase_trace_csv(const Waveform& trace) {
  std::string out = "sample_index,phase_error_rad\n";
  for (std::size_t n = 0; n < trace.size(); ++n) out += std::to_string(n) + ',' + detail::fmt_g(trace.samples[n], 17) + '\n';
  return out;
}

}  // namespace scmodem

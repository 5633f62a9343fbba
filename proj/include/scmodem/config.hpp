#pragma once

// Flat key-value configuration files.
//
//   # comment
//   key = value
//   channel.ebn0_db = 9.6      # dotted prefixes group settings
//
// Blank lines and text after '#' are ignored. Keys are unique; an unknown
// key is an error so typos do not silently fall back to defaults.

#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scmodem/fixed_point.hpp"
#include "scmodem/harness.hpp"

namespace scmodem {

using KeyValues = std::map<std::string, std::string, std::less<>>;

namespace detail {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}
}  // namespace detail

inline KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(std::string(key), std::string(value)).second)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
  }
  return kv;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_key_values(ss.str());
}

namespace detail {
inline double to_double(std::string_view key, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: '" + std::string(key) + "' is not a number: " + v);
  return d;
}

inline std::uint64_t to_u64(std::string_view key, const std::string& v) {
  std::uint64_t out = 0;
  int base = 10;
  std::string_view s = v;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  // Allow 1e6-style counts.
  if (base == 10 && s.find_first_of("eE.") != std::string_view::npos) {
    const double d = to_double(key, v);
    if (d < 0 || d != std::floor(d)) throw std::invalid_argument("config: '" + std::string(key) + "' must be a count");
    return static_cast<std::uint64_t>(d);
  }
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::invalid_argument("config: '" + std::string(key) + "' is not an unsigned integer: " + v);
  return out;
}

inline bool to_bool(std::string_view key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + std::string(key) + "' is not a boolean: " + v);
}
}  // namespace detail

// "0xA5C3" (4 bits per hex digit, MSB first) or a string of 0/1 characters.
inline BitStream parse_bit_pattern(std::string_view s) {
  BitStream bits;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    for (char c : s.substr(2)) {
      int v = 0;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
      else throw std::invalid_argument("bit pattern: bad hex digit");
      for (int b = 3; b >= 0; --b) bits.push_back((v >> b) & 1);
    }
    return bits;
  }
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument("bit pattern: expected 0/1 characters or 0x hex");
    bits.push_back(c - '0');
  }
  return bits;
}

// Comma-separated numbers, e.g. "0,2,4,6,8".
inline std::vector<double> parse_number_list(std::string_view s) {
  std::vector<double> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = detail::trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(detail::to_double("list", std::string(item)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

// Settings for the sweep and fxvec subcommands alongside the chain itself.
struct SweepSettings {
  std::vector<double> ebn0_db{0.0, 2.0, 4.0, 6.0, 8.0};
  SweepOptions options{};
};

struct FxSettings {
  double cutoff_hz = 1500.0;
  int n_taps = 33;
  int word_bits = 16;
  int frac_bits = 15;
  std::size_t n_samples = 10000;
  double amplitude = 0.9;  // stimulus peak as a fraction of full scale
};

struct RunConfig {
  SimConfig sim;
  SweepSettings sweep;
  FxSettings fx;
};

inline RunConfig config_from_key_values(const KeyValues& kv) {
  using namespace detail;
  RunConfig rc;
  auto& s = rc.sim;
  std::optional<bool> use_costas;
  CostasOptions co;
  for (const auto& [key, v] : kv) {
    if (key == "symbol_rate_hz") s.symbol_rate_hz = to_double(key, v);
    else if (key == "carrier_freq_hz") s.carrier_freq_hz = to_double(key, v);
    else if (key == "sample_rate_hz") s.sample_rate_hz = to_double(key, v);
    else if (key == "line_code") s.line_code = parse_line_code(v);
    else if (key == "n_bits") s.n_bits = to_u64(key, v);
    else if (key == "seed") s.seed = to_u64(key, v);
    else if (key == "preamble") s.preamble = parse_bit_pattern(v);
    else if (key == "settle_symbols") s.settle_symbols = to_u64(key, v);
    else if (key == "pulse.shape") s.pulse.kind = parse_pulse_kind(v);
    else if (key == "pulse.rolloff") s.pulse.rolloff = to_double(key, v);
    else if (key == "pulse.span_symbols") s.pulse.span_symbols = static_cast<int>(to_u64(key, v));
    else if (key == "channel.ebn0_db") s.channel.ebn0_db = to_double(key, v);
    else if (key == "channel.phase_offset_rad") s.channel.carrier_phase_offset_rad = to_double(key, v);
    else if (key == "channel.freq_offset_hz") s.channel.carrier_freq_offset_hz = to_double(key, v);
    else if (key == "channel.gain") s.channel.gain = to_double(key, v);
    else if (key == "adc.enabled") s.adc.enabled = to_bool(key, v);
    else if (key == "adc.n_bits") s.adc.n_bits = static_cast<int>(to_u64(key, v));
    else if (key == "adc.full_scale") s.adc.full_scale = to_double(key, v);
    else if (key == "receiver") {
      if (v == "costas") use_costas = true;
      else if (v == "ideal") use_costas = false;
      else throw std::invalid_argument("config: receiver must be 'ideal' or 'costas'");
    }
    else if (key == "costas.bn_t") co.bn_t = to_double(key, v);
    else if (key == "costas.zeta") co.zeta = to_double(key, v);
    else if (key == "costas.kp") co.kp = to_double(key, v);
    else if (key == "costas.ki") co.ki = to_double(key, v);
    else if (key == "costas.arm_taps") co.arm_taps = static_cast<int>(to_u64(key, v));
    else if (key == "costas.arm_cutoff_factor") co.arm_cutoff_factor = to_double(key, v);
    else if (key == "costas.initial_phase_rad") co.initial_phase_rad = to_double(key, v);
    else if (key == "sweep.ebn0_db") rc.sweep.ebn0_db = parse_number_list(v);
    else if (key == "sweep.min_errors") rc.sweep.options.min_errors = to_u64(key, v);
    else if (key == "sweep.max_bits") rc.sweep.options.max_bits = to_u64(key, v);
    else if (key == "sweep.batch_bits") rc.sweep.options.batch_bits = to_u64(key, v);
    else if (key == "fx.cutoff_hz") rc.fx.cutoff_hz = to_double(key, v);
    else if (key == "fx.n_taps") rc.fx.n_taps = static_cast<int>(to_u64(key, v));
    else if (key == "fx.word_bits") rc.fx.word_bits = static_cast<int>(to_u64(key, v));
    else if (key == "fx.frac_bits") rc.fx.frac_bits = static_cast<int>(to_u64(key, v));
    else if (key == "fx.n_samples") rc.fx.n_samples = to_u64(key, v);
    else if (key == "fx.amplitude") rc.fx.amplitude = to_double(key, v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  const bool any_costas_key = kv.lower_bound("costas.") != kv.end() && kv.lower_bound("costas.")->first.starts_with("costas.");
  if (use_costas.value_or(any_costas_key)) s.costas = co;
  s.channel.rng = RngStream(s.seed, 0);
  return rc;
}

}  // namespace scmodem

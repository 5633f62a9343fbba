// scmodem: command-line harness for the BPSK transceiver simulator.
//
//   scmodem simulate --config sim.conf [--seed N] [--out trace.csv] [--bits N] [--ebn0 x]
//   scmodem sweep    --config sim.conf --seed N [--out ber.csv] [--ebn0 a,b,c] [--bits N]
//   scmodem theory   [--config sim.conf] [--out theory.csv] [--ebn0 a,b,c]
//   scmodem taps     [--config sim.conf] [--out taps.csv]
//   scmodem fxvec    [--config sim.conf] [--seed N] --out prefix [--bits N]

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scmodem/scmodem.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string ebn0;
  std::optional<std::uint64_t> bits;
};

void add_common(CLI::App* sub, Common& c, bool seed_required = false) {
  sub->add_option("--config", c.config, "key = value configuration file");
  auto* seed = sub->add_option("--seed", c.seed, "master seed (overrides config)");
  if (seed_required) seed->required();
  sub->add_option("--out", c.out, "output path (stdout when omitted)");
  sub->add_option("--ebn0", c.ebn0, "comma-separated Eb/N0 values in dB");
  sub->add_option("--bits", c.bits, "bit count (simulate: payload, sweep: max bits per point, fxvec: samples)");
}

scmodem::RunConfig load(const Common& c) {
  return scmodem::detail::stage("config", [&] {
    auto rc = c.config.empty() ? scmodem::config_from_key_values({})
                               : scmodem::config_from_key_values(scmodem::load_key_values(c.config));
    if (c.seed) rc.sim.seed = *c.seed;
    rc.sim.channel.rng = scmodem::RngStream(rc.sim.seed, 0);
    if (!c.ebn0.empty()) rc.sweep.ebn0_db = scmodem::parse_number_list(c.ebn0);
    return rc;
  });
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  scmodem::detail::write_file(path, text);
}

int cmd_simulate(const Common& c) {
  auto rc = load(c);
  if (!c.ebn0.empty()) rc.sim.channel.ebn0_db = rc.sweep.ebn0_db.front();
  if (c.bits) rc.sim.n_bits = *c.bits;
  scmodem::ChainOptions opts;
  opts.keep_traces = true;
  const auto chain = scmodem::run_chain(rc.sim, opts);
  auto r = scmodem::count_errors(chain.tx_bits, chain.rx_bits);
  const auto& d = chain.diagnostics;
  std::fprintf(stderr,
               "bits=%llu errors=%llu ber=%.6g ci=[%.6g, %.6g] inverted=%d low_confidence=%d "
               "ebn0_target=%s ebn0_measured=%s receiver=%s\n",
               static_cast<unsigned long long>(r.bits_compared), static_cast<unsigned long long>(r.bit_errors), r.ber,
               r.ci_low, r.ci_high, d.inverted ? 1 : 0, d.low_confidence ? 1 : 0,
               scmodem::detail::fmt_g(rc.sim.channel.ebn0_db, 6).c_str(),
               scmodem::detail::fmt_g(d.measured_ebn0_db, 6).c_str(), rc.sim.costas ? "costas" : "ideal");
  if (d.phase_trace) write_output(c.out, scmodem::format_phase_trace_csv(*d.phase_trace));
  else if (!c.out.empty()) std::fprintf(stderr, "note: ideal receiver has no phase trace; nothing written\n");
  return 0;
}

int cmd_sweep(const Common& c) {
  auto rc = load(c);
  if (c.bits) rc.sweep.options.max_bits = *c.bits;
  const auto results = scmodem::ber_sweep(rc.sim, rc.sweep.ebn0_db, rc.sweep.options);
  std::vector<scmodem::BerResult> ok;
  int status = 0;
  for (const auto& r : results) {
    if (r.ok) {
      ok.push_back(r);
      std::fprintf(stderr, "ebn0=%g bits=%llu errors=%llu ber=%.4g (%.2fs)\n", r.ebn0_db,
                   static_cast<unsigned long long>(r.bits_compared), static_cast<unsigned long long>(r.bit_errors),
                   r.ber, r.wall_time_s);
    } else {
      std::fprintf(stderr, "error [sweep point ebn0=%g]: %s\n", r.ebn0_db, r.error.c_str());
      status = 1;
    }
  }
  if (!ok.empty()) write_output(c.out, scmodem::format_ber_csv(ok));
  return status;
}

int cmd_theory(const Common& c) {
  const auto rc = load(c);
  std::string out = "ebn0_db,ber_theory\n";
  for (double x : rc.sweep.ebn0_db)
    out += scmodem::detail::fmt_g(x, 12) + ',' + scmodem::detail::fmt_g(scmodem::theoretical_ber_bpsk(x), 12) + '\n';
  write_output(c.out, out);
  return 0;
}

int cmd_taps(const Common& c) {
  const auto rc = load(c);
  rc.sim.validate();
  const auto taps = scmodem::shape_taps(rc.sim.pulse, rc.sim.samples_per_line_symbol());
  write_output(c.out, scmodem::format_taps_csv(taps));
  return 0;
}

int cmd_fxvec(const Common& c) {
  auto rc = load(c);
  if (c.out.empty()) throw std::invalid_argument("fxvec needs --out <prefix>");
  if (c.bits) rc.fx.n_samples = *c.bits;
  const scmodem::fx::QFormat q(rc.fx.word_bits, rc.fx.frac_bits);
  const auto filter = scmodem::fx::fx_design_lpf(rc.fx.cutoff_hz, rc.sim.sample_rate_hz, rc.fx.n_taps, q);
  scmodem::RngStream rng(rc.sim.seed, 0);
  std::vector<std::int64_t> stimulus(rc.fx.n_samples);
  for (auto& x : stimulus) x = scmodem::fx::fx_quantize(rc.fx.amplitude * (2.0 * rng.uniform() - 1.0), q);
  const auto expected = scmodem::fx::fx_fir_apply(filter, stimulus);
  const auto files = scmodem::fx::export_testvectors(stimulus, expected, c.out, {q, filter.coeff_codes.size(), rc.sim.seed});
  scmodem::fx::write_coefficients(filter, c.out + "_coeffs.csv");
  std::fprintf(stderr, "wrote %s, %s, %s_coeffs.csv\n", files.stimulus.c_str(), files.expected.c_str(), c.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-carrier BPSK transceiver simulator"};
  app.require_subcommand(1);
  Common c;
  auto* simulate = app.add_subcommand("simulate", "single run with diagnostics; --out writes the Costas phase trace");
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo BER curve as CSV");
  auto* theory = app.add_subcommand("theory", "closed-form BPSK BER curve as CSV");
  auto* taps = app.add_subcommand("taps", "pulse-shaping taps, one per line");
  auto* fxvec = app.add_subcommand("fxvec", "fixed-point LPF test vectors");
  add_common(simulate, c);
  add_common(sweep, c, true);
  add_common(theory, c);
  add_common(taps, c);
  add_common(fxvec, c);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(c);
    if (*sweep) return cmd_sweep(c);
    if (*theory) return cmd_theory(c);
    if (*taps) return cmd_taps(c);
    if (*fxvec) return cmd_fxvec(c);
  } catch (const scmodem::StageError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.stage().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    const auto subs = app.get_subcommands();
    std::fprintf(stderr, "error [%s]: %s\n", subs.empty() ? "cli" : subs.front()->get_name().c_str(), e.what());
    return 2;
  }
  return 1;
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "scmodem/harness.hpp"

using namespace scmodem;

namespace {
SimConfig small(std::size_t n_bits = 2000) {
  SimConfig c;
  c.n_bits = n_bits;
  c.settle_symbols = 100;
  return c;
}
}  // namespace

TEST(RunChain, NoiselessIdealIsIdentity) {
  const auto r = run_chain(small());
  EXPECT_EQ(r.rx_bits, r.tx_bits);
  EXPECT_EQ(r.tx_bits.size(), 2000u);
  EXPECT_FALSE(r.diagnostics.inverted);
  EXPECT_EQ(r.diagnostics.preamble_mismatches, 0u);
  EXPECT_NEAR(r.diagnostics.eb, 40.0 / 80000.0, 1e-3 * 40.0 / 80000.0);
}

TEST(RunChain, CostasAtPiReportsInversion) {
  auto c = small(3000);
  c.settle_symbols = 500;
  c.costas = CostasOptions{};
  c.channel.carrier_phase_offset_rad = std::numbers::pi;
  ChainOptions opts;
  opts.keep_traces = true;
  const auto r = run_chain(c, opts);
  EXPECT_EQ(r.rx_bits, r.tx_bits);
  EXPECT_TRUE(r.diagnostics.inverted);
  ASSERT_TRUE(r.diagnostics.phase_trace.has_value());
}

TEST(RunChain, CostasAcquiresForEveryLineCode) {
  // Unipolar and AMI carry half the power of polar; the loop gains account
  // for it so acquisition finishes inside the settle period.
  for (auto code : kAllLineCodes) {
    auto c = small(3000);
    c.settle_symbols = 500;
    c.line_code = code;
    c.costas = CostasOptions{};
    c.channel.carrier_phase_offset_rad = 0.5;
    c.channel.carrier_freq_offset_hz = 10.0;
    const auto r = run_chain(c);
    EXPECT_EQ(count_errors(r.tx_bits, r.rx_bits).bit_errors, 0u) << to_string(code);
  }
}

TEST(RunChain, SeedSelectsPayload) {
  auto a = small(500), b = small(500);
  a.channel.rng = RngStream(1, 0);
  b.channel.rng = RngStream(2, 0);
  EXPECT_NE(run_chain(a).tx_bits, run_chain(b).tx_bits);
  EXPECT_EQ(run_chain(a).tx_bits, run_chain(a).tx_bits);
}

TEST(RunChain, MeasuredEbN0TracksTarget) {
  auto c = small(20000);
  c.channel.ebn0_db = 5.0;
  const auto r = run_chain(c);
  EXPECT_NEAR(r.diagnostics.measured_ebn0_db, 5.0, 0.1);
}

TEST(RunChain, StageErrorsNameTheStage) {
  auto c = small();
  c.carrier_freq_hz = 50000.0;
  try {
    run_chain(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
}

// ---------------------------------------------------------------------------
// Error counting
// ---------------------------------------------------------------------------

TEST(CountErrors, Examples) {
  auto r = count_errors({1, 0, 1, 1}, {1, 1, 1, 0});
  EXPECT_EQ(r.bit_errors, 2u);
  EXPECT_EQ(r.bits_compared, 4u);
  EXPECT_DOUBLE_EQ(r.ber, 0.5);
  r = count_errors({1, 0, 1, 1}, {0, 0, 1, 1}, 1);
  EXPECT_EQ(r.bit_errors, 0u);
  EXPECT_EQ(r.bits_compared, 3u);
  r = count_errors({}, {});
  EXPECT_EQ(r.bits_compared, 0u);
  EXPECT_EQ(r.ber, 0.0);
  EXPECT_THROW(count_errors({1, 0}, {1}), std::invalid_argument);
  EXPECT_THROW(count_errors({1}, {1}, 2), std::invalid_argument);
}

TEST(Wilson, KnownIntervals) {
  // Oracle values from the closed form with z = 1.96: 10/100 -> [0.05523, 0.17437].
  const auto ci = wilson_interval(10, 100);
  EXPECT_NEAR(ci.low, 0.0552291, 1e-6);
  EXPECT_NEAR(ci.high, 0.1743657, 1e-6);
  const auto zero = wilson_interval(0, 1000);
  EXPECT_EQ(zero.low, 0.0);
  EXPECT_GT(zero.high, 0.0);
  const auto all = wilson_interval(50, 50);
  EXPECT_EQ(all.high, 1.0);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

TEST(BerSweep, NoiselessPointRunsToMaxBits) {
  auto c = small();
  SweepOptions o;
  o.max_bits = 20000;
  o.batch_bits = 5000;
  const auto r = ber_sweep(c, {kNoiseless}, o);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].bits_compared, 20000u);
  EXPECT_EQ(r[0].bit_errors, 0u);
  EXPECT_EQ(r[0].ber, 0.0);
  EXPECT_TRUE(r[0].ok);
}

TEST(BerSweep, MatchesTheoryAtFourDb) {
  auto c = small();
  SweepOptions o;
  o.min_errors = 200;
  o.batch_bits = 5000;
  const auto r = ber_sweep(c, {4.0}, o);
  ASSERT_TRUE(r[0].ok);
  EXPECT_GE(r[0].bit_errors, 200u);
  // Oracle: Q(sqrt(2 * 10^0.4)) = 0.0125008180407.
  EXPECT_TRUE(within_wilson(r[0], 0.0125008180407))
      << r[0].ber << " [" << r[0].ci_low << ", " << r[0].ci_high << "]";
}

TEST(BerSweep, IndependentOfThreadCount) {
  auto c = small();
  SweepOptions o;
  o.min_errors = 50;
  o.batch_bits = 2000;
  o.max_bits = 40000;
  o.threads = 1;
  const auto a = ber_sweep(c, {3.0, 6.0}, o);
  o.threads = 3;
  const auto b = ber_sweep(c, {3.0, 6.0}, o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].bits_compared, b[i].bits_compared);
    EXPECT_EQ(a[i].bit_errors, b[i].bit_errors);
  }
}

TEST(BerSweep, FailedPointIsReported) {
  auto c = small();
  c.pulse.rolloff = 3.0;
  c.pulse.kind = PulseShape::Kind::RaisedCosine;
  SweepOptions o;
  o.max_bits = 2000;
  o.batch_bits = 1000;
  const auto r = ber_sweep(c, {2.0}, o);
  EXPECT_FALSE(r[0].ok);
  EXPECT_NE(r[0].error.find("config"), std::string::npos) << r[0].error;
  EXPECT_THROW(ber_sweep(c, {}, o), std::invalid_argument);
}

TEST(SweepThreads, EnvironmentCap) {
  EXPECT_EQ(sweep_threads(4), 4u);
  setenv("SCMODEM_THREADS", "2", 1);
  EXPECT_EQ(sweep_threads(0), 2u);
  unsetenv("SCMODEM_THREADS");
  EXPECT_GE(sweep_threads(0), 1u);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

TEST(EmitCsv, RowsAndFormat) {
  BerResult a;
  a.ebn0_db = 0.0;
  a.bits_compared = 1000;
  a.bit_errors = 79;
  finalize(a);
  BerResult b;
  b.ebn0_db = 9.6;
  b.bits_compared = 10000000;
  b.bit_errors = 100;
  finalize(b);
  const auto text = format_ber_csv({a, b});
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "ebn0_db,bits,errors,ber_sim,ci_low,ci_high,ber_theory");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 16), "0,1000,79,0.079,");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 22), "9.6,10000000,100,1e-05");
  EXPECT_FALSE(std::getline(in, line));

  const auto path = std::filesystem::temp_directory_path() / "scmodem_emit.csv";
  emit_csv({a, b}, path);
  std::ifstream f(path);
  std::ostringstream s;
  s << f.rdbuf();
  EXPECT_EQ(s.str(), text);
  EXPECT_THROW(emit_csv({}, path), std::invalid_argument);
  EXPECT_THROW(emit_csv({a}, "/nonexistent_dir_scmodem/x.csv"), std::runtime_error);
}

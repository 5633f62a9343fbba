#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scmodem/config.hpp"

using namespace scmodem;

TEST(ParseKeyValues, CommentsAndWhitespace) {
  const auto kv = parse_key_values("# header\n\n  line_code = ami  # trailing\nseed=7\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("line_code"), "ami");
  EXPECT_EQ(kv.at("seed"), "7");
  EXPECT_THROW(parse_key_values("seed = 1\nseed = 2\n"), std::invalid_argument);
  EXPECT_THROW(parse_key_values("just words\n"), std::invalid_argument);
  EXPECT_THROW(parse_key_values(" = 3\n"), std::invalid_argument);
}

TEST(ConfigFromKeyValues, FullExample) {
  const auto rc = config_from_key_values(parse_key_values(R"(
line_code = manchester
pulse.shape = rrc
pulse.rolloff = 0.5
pulse.span_symbols = 6
channel.ebn0_db = 9.6
channel.phase_offset_rad = 0.5
preamble = 0xA5
seed = 0x10
n_bits = 1e5
costas.bn_t = 0.01
sweep.ebn0_db = 0, 3, 6
sweep.max_bits = 2e6
adc.enabled = true
adc.n_bits = 10
fx.n_taps = 21
)"));
  const auto& s = rc.sim;
  EXPECT_EQ(s.line_code, LineCode::Manchester);
  EXPECT_EQ(s.pulse.kind, PulseShape::Kind::RootRaisedCosine);
  EXPECT_EQ(s.pulse.rolloff, 0.5);
  EXPECT_EQ(s.pulse.span_symbols, 6);
  EXPECT_EQ(s.channel.ebn0_db, 9.6);
  EXPECT_EQ(s.preamble, (BitStream{1, 0, 1, 0, 0, 1, 0, 1}));
  EXPECT_EQ(s.seed, 16u);
  EXPECT_EQ(s.n_bits, 100000u);
  ASSERT_TRUE(s.costas.has_value());
  EXPECT_EQ(s.costas->bn_t, 0.01);
  EXPECT_EQ(rc.sweep.ebn0_db, (std::vector<double>{0, 3, 6}));
  EXPECT_EQ(rc.sweep.options.max_bits, 2000000u);
  EXPECT_TRUE(s.adc.enabled);
  EXPECT_EQ(s.adc.n_bits, 10);
  EXPECT_EQ(rc.fx.n_taps, 21);
}

TEST(ConfigFromKeyValues, DefaultsAndReceiverChoice) {
  const auto d = config_from_key_values({});
  EXPECT_FALSE(d.sim.costas.has_value());
  EXPECT_TRUE(d.sim.channel.noiseless());
  EXPECT_EQ(d.sim.preamble, default_preamble());
  EXPECT_TRUE(config_from_key_values(parse_key_values("receiver = costas")).sim.costas.has_value());
  EXPECT_FALSE(config_from_key_values(parse_key_values("receiver = ideal\ncostas.zeta = 1")).sim.costas.has_value());
  EXPECT_EQ(config_from_key_values(parse_key_values("channel.ebn0_db = inf")).sim.channel.ebn0_db, kNoiseless);
}

TEST(ConfigFromKeyValues, Rejections) {
  EXPECT_THROW(config_from_key_values(parse_key_values("colour = red")), std::invalid_argument);
  EXPECT_THROW(config_from_key_values(parse_key_values("line_code = nrz-x")), std::invalid_argument);
  EXPECT_THROW(config_from_key_values(parse_key_values("n_bits = many")), std::invalid_argument);
  EXPECT_THROW(config_from_key_values(parse_key_values("n_bits = 1.5")), std::invalid_argument);
  EXPECT_THROW(config_from_key_values(parse_key_values("adc.enabled = maybe")), std::invalid_argument);
  EXPECT_THROW(config_from_key_values(parse_key_values("receiver = magic")), std::invalid_argument);
  EXPECT_THROW(config_from_key_values(parse_key_values("preamble = 0xZZ")), std::invalid_argument);
  EXPECT_THROW(parse_number_list(" , "), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {
struct Cli {
  int status;
  std::string out;
};

Cli cli(const std::string& args) {
  const auto log = std::filesystem::temp_directory_path() / "scmodem_cli_stdout.txt";
  const std::string cmd = std::string(SCMODEM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream f(log);
  std::ostringstream s;
  s << f.rdbuf();
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, s.str()};
}

std::filesystem::path write_conf(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}
}  // namespace

TEST(Cli, TheoryCurve) {
  const auto r = cli("theory --ebn0 0,9.6");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("ebn0_db,ber_theory\n0,0.0786496035"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("9.6,9.73"), std::string::npos) << r.out;
}

TEST(Cli, SimulateNoiseless) {
  const auto conf = write_conf("scmodem_cli_sim.conf", "n_bits = 2000\nsettle_symbols = 100\n");
  const auto r = cli("simulate --config " + conf.string());
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("bits=2000 errors=0"), std::string::npos) << r.out;
}

TEST(Cli, SweepWritesCsvAndNeedsSeed) {
  const auto conf = write_conf("scmodem_cli_sweep.conf", "settle_symbols = 100\nsweep.batch_bits = 5000\n");
  const auto csv = std::filesystem::temp_directory_path() / "scmodem_cli_sweep.csv";
  const auto r = cli("sweep --config " + conf.string() + " --seed 3 --ebn0 2 --out " + csv.string());
  EXPECT_EQ(r.status, 0) << r.out;
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "ebn0_db,bits,errors,ber_sim,ci_low,ci_high,ber_theory");
  EXPECT_NE(cli("sweep --config " + conf.string()).status, 0);
}

TEST(Cli, ErrorsNameTheStage) {
  const auto bad = write_conf("scmodem_cli_bad.conf", "carrier_freq_hz = 60000\nn_bits = 100\n");
  auto r = cli("simulate --config " + bad.string());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("error [config]"), std::string::npos) << r.out;
  r = cli("simulate --config /nonexistent/x.conf");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("error [config]"), std::string::npos) << r.out;
  r = cli("fxvec --out /nonexistent_dir_scmodem/x");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("error [fxvec]"), std::string::npos) << r.out;
  EXPECT_NE(cli("bogus").status, 0);
}

TEST(Cli, FxvecWritesVectors) {
  const auto prefix = std::filesystem::temp_directory_path() / "scmodem_cli_fx";
  const auto r = cli("fxvec --seed 5 --bits 100 --out " + prefix.string());
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(prefix.string() + "_stimulus.txt"));
  EXPECT_TRUE(std::filesystem::exists(prefix.string() + "_expected.txt"));
  EXPECT_TRUE(std::filesystem::exists(prefix.string() + "_coeffs.csv"));
}

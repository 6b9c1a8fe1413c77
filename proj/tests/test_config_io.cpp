#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "chaoslink/config.hpp"
#include "chaoslink/io.hpp"

using namespace chaoslink;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("chaoslink_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string config_error_key(const std::string &text) {
  try {
    parse_config(text);
  } catch (const ConfigError &e) {
    return e.key();
  }
  return "<no error>";
}

} // namespace

TEST_CASE("empty config gives the defaults") {
  const RunConfig cfg = parse_config("# nothing here\n\n");
  CHECK(cfg.link.boost.i_ref == kReferenceIRef);
  CHECK(cfg.link.ramp.v_lower == kReferenceRampLower);
  CHECK(cfg.link.initial == reference_initial(cfg.link.boost));
  CHECK(cfg.message.kind == "sine");
  CHECK(cfg.channel.kind == "ideal");
}

TEST_CASE("invalid values name the key") {
  CHECK(config_error_key("boost.i_ref = -1\n") == "boost.i_ref");
  CHECK(config_error_key("buck.l = 0\n") == "buck.l");
  CHECK(config_error_key("ramp.v_upper = 1\n") == "ramp.v_upper");
  CHECK(config_error_key("channel.kind = awgn\nchannel.sigma = -0.1\n") == "channel.sigma");
  CHECK(config_error_key("message.kind = chirp\n") == "message.kind");
  CHECK(config_error_key("boost.i_ref = abc\n") == "boost.i_ref");
  CHECK(config_error_key("bogus.key = 1\n") == "bogus.key");
  CHECK(config_error_key("boost.i_ref = 1\nboost.i_ref = 2\n") == "boost.i_ref");
}

TEST_CASE("errors carry the line number") {
  try {
    parse_config("boost.v_in = 10\n\nno equals sign\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("initial state keys override the reference start") {
  const RunConfig cfg = parse_config("initial.boost.v_c = 12.5\n");
  CHECK(cfg.link.initial.boost.v_c == 12.5);
  CHECK(cfg.link.initial.boost.i == 0.0);
}

TEST_CASE("config text round trip") {
  RunConfig cfg = parse_config("boost.i_ref = 2.75\nramp.shape = sawtooth\nchannel.kind = awgn\n"
                               "channel.sigma = 1e-4\nchannel.seed = 9\nmessage.kind = triangle\n"
                               "lyapunov.direction = 0, 1\nsensitivity.deltas = 0, 0.1\n");
  const std::string text = format_config(cfg);
  const RunConfig back = parse_config(text);
  CHECK(format_config(back) == text);
  CHECK(back.link.ramp.shape == RampShape::Sawtooth);
  CHECK(back.channel.seed == 9);
  CHECK(back.lyapunov.direction == std::vector<double>{0.0, 1.0});
  CHECK(config_entries(back).size() == config_keys().size());
}

TEST_CASE("override applies and revalidates") {
  RunConfig cfg = parse_config("");
  apply_override(cfg, "boost.i_ref=3.0");
  CHECK(cfg.link.boost.i_ref == 3.0);
  CHECK_THROWS_AS(apply_override(cfg, "boost.i_ref=-3"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "noequals"), ConfigError);
}

TEST_CASE("sampled message file resolves against the config directory") {
  const fs::path dir = scratch_dir("sampled");
  write_waveform_csv(Waveform{0.0, 1e-3, {0.0, 0.25, 0.5}}, dir / "msg.csv");
  write_text_file(dir / "run.cfg", "message.kind = sampled\nmessage.file = msg.csv\n");
  const RunConfig cfg = load_config(dir / "run.cfg");
  const MessageSource src = cfg.message_source();
  CHECK(message_value(src, 1.5e-3) == doctest::Approx(0.375));
  CHECK(get_config_value(cfg, "message.file") == "msg.csv");
}

TEST_CASE("double formatting") {
  CHECK(format_double(0.0) == "0.00000000000000000");
  CHECK(format_double(5.5) == "5.5000000000000000");
  CHECK(parse_double("+1.5") == 1.5);
  CHECK_THROWS_AS(parse_double("1.5x"), DomainError);
  CHECK_THROWS_AS(parse_double(""), DomainError);
  CHECK(std::isnan(parse_double(format_double(NAN))));
  CHECK(parse_double(format_double(-INFINITY)) == -INFINITY);
}

TEST_CASE("single-sample waveform text") {
  const Waveform wf{0.0, 1e-3, {5.5}};
  CHECK(format_waveform_csv(wf) == "t,value\n0.00000000000000000,5.5000000000000000\n");
  CHECK(parse_waveform_csv(format_waveform_csv(wf), 1e-3) == wf);
}

TEST_CASE("waveform CSV round trip is exact") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_real_distribution<double> logstep(-9.0, -2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Waveform wf;
    wf.t0 = trial % 2 ? 0.0 : u(rng) * 1e-3;
    wf.step = std::pow(10.0, logstep(rng));
    for (int n = 0; n < 5000; ++n) wf.samples.push_back(u(rng) * std::pow(10.0, (n % 40) - 20));
    const std::string text = format_waveform_csv(wf);
    const Waveform back = parse_waveform_csv(text);
    CHECK(back.samples == wf.samples);
    CHECK(back.t0 == wf.t0);
    // With t0 = 0 the step is pinned by the t column; otherwise several
    // neighbouring steps can give the same times, and any of them will do.
    if (wf.t0 == 0.0) CHECK(back.step == wf.step);
    REQUIRE(format_waveform_csv(back) == text);
  }
  const fs::path dir = scratch_dir("wave");
  Waveform big{0.0, 1e-5, {}};
  for (int n = 0; n < 100000; ++n) big.samples.push_back(u(rng));
  write_waveform_csv(big, dir / "w.csv");
  CHECK(read_waveform_csv(dir / "w.csv") == big);
}

TEST_CASE("malformed waveform CSV") {
  CHECK_THROWS_AS(parse_waveform_csv("0,1\n1,2\n"), DomainError);
  try {
    parse_waveform_csv("t,value\n0,1\n1,x\n");
    FAIL("expected DomainError");
  } catch (const DomainError &e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_waveform_csv("t,value\n0,1\n1,2\n5,3\n"), DomainError); // uneven spacing
}

TEST_CASE("bifurcation CSV round trip") {
  BifurcationData d;
  d.system = "boost";
  d.parameter = "boost.i_ref";
  d.values = {0.5, 1.0, 1.5};
  d.samples = {{0.1, 0.2}, {}, {0.3}};
  d.flagged = {false, true, false};
  const fs::path dir = scratch_dir("bif");
  write_bifurcation_csv(d, dir / "b.csv");
  const auto back = read_bifurcation_csv(dir / "b.csv");
  CHECK(back.values == d.values);
  CHECK(back.samples == d.samples);
  CHECK(back.flagged == d.flagged);
}

TEST_CASE("manifest") {
  const fs::path dir = scratch_dir("manifest");
  RunManifest m;
  m.tool_version = "0.1.0";
  m.command = "link";
  m.config = {{"boost.i_ref", "3.2"}};
  m.channel_seed = 42;
  m.outputs = {"a.csv"};
  m.results = {{"snr_db", "60"}};
  CHECK_THROWS_AS(write_manifest(m, dir), DomainError); // a.csv missing
  write_text_file(dir / "a.csv", "t,value\n");
  write_manifest(m, dir);
  const RunManifest back = read_manifest(dir / "manifest.json");
  CHECK(back.command == "link");
  CHECK(back.config == m.config);
  CHECK(back.channel_seed == 42);
  CHECK(back.outputs == m.outputs);
  CHECK(back.results == m.results);
}

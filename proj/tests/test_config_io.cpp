#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "truthlab/checkpoint.hpp"
#include "truthlab/config.hpp"
#include "truthlab/io.hpp"
#include "truthlab/rng.hpp"

using namespace truthlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() / ("truthlab_io_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string operator/(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("config parses sections, comments, and scalar types", "[config_io]") {
  config::Config cfg = config::parse_config_string(
      "# full-line comment\n"
      "top = 3\n"
      "[world]\n"
      "n_subjects = 20   # trailing comment\n"
      "rho = 0.95\n"
      "toy = true\n"
      "name = \"g # not a comment\"\n"
      "esc = \"a\\\"b\\\\c\"\n"
      "\n"
      "[train]\n"
      "lr = 1e-4\n");
  CHECK(cfg.get_int("top", 0) == 3);
  CHECK(cfg.require_int("world.n_subjects") == 20);
  CHECK(cfg.require_double("world.rho") == 0.95);
  CHECK(cfg.get_bool("world.toy", false) == true);
  CHECK(cfg.require_string("world.name") == "g # not a comment");
  CHECK(cfg.require_string("world.esc") == "a\"b\\c");
  CHECK(cfg.get_double("train.lr", 0.0) == 1e-4);
  CHECK(cfg.has("train.lr"));
  CHECK_FALSE(cfg.has("train.momentum"));
  // Integers coerce upward to double but never the reverse.
  CHECK(cfg.get_double("world.n_subjects", 0.0) == 20.0);
  CHECK_THROWS_AS(cfg.require_int("world.rho"), config::ConfigError);
}

TEST_CASE("config errors carry the dotted field name", "[config_io]") {
  config::Config cfg = config::parse_config_string("[a]\nx = 1.5\n");
  try {
    cfg.require_int("a.x");
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    CHECK(e.field == "a.x");
    CHECK(std::string(e.what()).find("a.x") != std::string::npos);
  }
  try {
    cfg.require_double("a.missing");
    FAIL("expected ConfigError");
  } catch (const config::ConfigError& e) {
    CHECK(e.field == "a.missing");
  }
}

TEST_CASE("config rejects malformed input with line numbers", "[config_io]") {
  CHECK_THROWS_WITH(config::parse_config_string("[unclosed\n"),
                    Catch::Matchers::ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(config::parse_config_string("x = 1\nno equals here\n"),
                    Catch::Matchers::ContainsSubstring("line 2"));
  CHECK_THROWS_WITH(config::parse_config_string("= 5\n"),
                    Catch::Matchers::ContainsSubstring("empty key"));
  CHECK_THROWS_WITH(config::parse_config_string("[]\n"),
                    Catch::Matchers::ContainsSubstring("empty section"));
  CHECK_THROWS_AS(config::parse_config_string("x = \"open\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config_string("x = \"bad\\n\"\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config_string("x = 1.2.3\n"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config_string("x =\n"), config::ConfigError);
}

TEST_CASE("canonical form sorts keys and survives a round trip", "[config_io]") {
  config::Config a = config::parse_config_string("[b]\nz = 1\n[a]\ny = 2.5\nx = \"s\"\n");
  config::Config b = config::parse_config_string("[a]\nx = \"s\"\ny = 2.5\n[b]\nz = 1\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.canonical() == "a.x = \"s\"\na.y = 2.5\nb.z = 1\n");
  // Canonical text reparses to the same canonical text.
  config::Config c = config::parse_config_string(a.canonical());
  CHECK(c.canonical() == a.canonical());
  CHECK(c.hash_hex() == a.hash_hex());
}

TEST_CASE("config hash is hex-formatted fnv1a of the canonical form", "[config_io]") {
  config::Config cfg = config::parse_config_string("[a]\nx = 1\n");
  std::string h = cfg.hash_hex();
  REQUIRE(h.size() == 16);
  for (char c : h) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  char oracle[17];
  std::snprintf(oracle, sizeof oracle, "%016llx",
                static_cast<unsigned long long>(rng::fnv1a64(cfg.canonical())));
  CHECK(h == oracle);
  config::Config other = config::parse_config_string("[a]\nx = 2\n");
  CHECK(other.hash_hex() != h);
}

TEST_CASE("shortest float format round trips exactly", "[config_io]") {
  for (double v : {0.1, -0.0, 1e-17, 1.0 / 3.0, 6.02214076e23, 2.5e-324, 0.0, 20000.0}) {
    std::string s = config::format_double(v);
    double back = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc{});
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(config::format_double(0.1) == "0.1");
  CHECK(config::format_double(-0.0) == "-0");
}

TEST_CASE("csv escaping follows the quoting rules", "[config_io]") {
  CHECK(io::csv_escape("plain") == "plain");
  CHECK(io::csv_escape("a,b") == "\"a,b\"");
  CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(io::csv_escape("two\nlines") == "\"two\nlines\"");
  CHECK(io::csv_escape("") == "");
}

TEST_CASE("csv writer stamps provenance columns on every row", "[config_io]") {
  TempDir tmp;
  io::OutputMeta meta;
  meta.config_hash = "deadbeefdeadbeef";
  meta.seed = 7;
  std::string path = tmp / "rows.csv";
  {
    io::CsvWriter w(path, meta);
    w.header({"step", "value"});
    w.row({"1", "0.5"});
    w.row({io::fmt(2LL), io::fmt(0.25)});
    REQUIRE(w.good());
  }
  std::string expected = "config_hash,seed,version,step,value\n";
  expected += "deadbeefdeadbeef,7," + std::string(kArtifactVersion) + ",1,0.5\n";
  expected += "deadbeefdeadbeef,7," + std::string(kArtifactVersion) + ",2,0.25\n";
  CHECK(slurp(path) == expected);
}

TEST_CASE("matrix dump writes the grid and a sidecar", "[config_io]") {
  TempDir tmp;
  io::OutputMeta meta;
  meta.config_hash = "0123456789abcdef";
  meta.seed = 3;
  la::Mat m(2, 3);
  m(0, 0) = 1.0;
  m(0, 1) = -0.5;
  m(0, 2) = 0.0;
  m(1, 0) = 0.1;
  m(1, 1) = 2.0;
  m(1, 2) = -3.25;
  std::string path = tmp / "w.csv";
  io::write_matrix_csv(path, m, meta, {{"kind", "value_matrix"}});
  CHECK(slurp(path) == "1,-0.5,0\n0.1,2,-3.25\n");
  nlohmann::json side = nlohmann::json::parse(slurp(path + ".meta.json"));
  CHECK(side["rows"] == 2);
  CHECK(side["cols"] == 3);
  CHECK(side["config_hash"] == "0123456789abcdef");
  CHECK(side["seed"] == 3);
  CHECK(side["version"] == kArtifactVersion);
  CHECK(side["kind"] == "value_matrix");
}

TEST_CASE("json outputs are provenance-stamped", "[config_io]") {
  TempDir tmp;
  io::OutputMeta meta;
  meta.config_hash = "aaaaaaaaaaaaaaaa";
  meta.seed = 11;
  std::string path = tmp / "out.json";
  io::write_json_file(path, {{"answer", 42}}, meta);
  nlohmann::json j = nlohmann::json::parse(slurp(path));
  CHECK(j["answer"] == 42);
  CHECK(j["config_hash"] == "aaaaaaaaaaaaaaaa");
  CHECK(j["seed"] == 11);
  CHECK(j["version"] == kArtifactVersion);

  nlohmann::json err = io::error_json("train.lr", "expected a number");
  CHECK(err["error"]["field"] == "train.lr");
  CHECK(err["error"]["message"] == "expected a number");
}

TEST_CASE("checkpoints round trip tensors bit-exactly", "[config_io]") {
  TempDir tmp;
  ckpt::Checkpoint ck;
  ck.meta = {{"config_hash", "ffff"}, {"seed", 5}, {"note", "roundtrip"}};
  ckpt::TensorBlock a;
  a.name = "w";
  a.shape = {2, 2};
  a.values = {1.0, -0.0, 1e-300, 0.1};
  ckpt::TensorBlock b;
  b.name = "bias";
  b.shape = {3};
  b.values = {-1.5, 0.0, 2.25};
  ck.tensors = {a, b};
  std::string path = tmp / "model.tlck";
  ckpt::write_checkpoint(path, ck);
  ckpt::Checkpoint back = ckpt::read_checkpoint(path);
  CHECK(back.meta["note"] == "roundtrip");
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.find("w").shape == a.shape);
  CHECK(back.find("w").values == a.values);
  CHECK(back.find("bias").values == b.values);
  CHECK(std::signbit(back.find("w").values[1]));
  CHECK_THROWS_AS(back.find("absent"), std::out_of_range);
}

TEST_CASE("checkpoint reader rejects foreign and corrupt files", "[config_io]") {
  TempDir tmp;
  std::string bogus = tmp / "bogus.tlck";
  {
    std::ofstream out(bogus, std::ios::binary);
    out << "NOPEnot a checkpoint";
  }
  CHECK_THROWS_WITH(ckpt::read_checkpoint(bogus), Catch::Matchers::ContainsSubstring("bad magic"));
  CHECK_THROWS_WITH(ckpt::read_checkpoint(tmp / "absent.tlck"),
                    Catch::Matchers::ContainsSubstring("cannot open"));

  ckpt::Checkpoint ck;
  ckpt::TensorBlock t;
  t.name = "w";
  t.shape = {2, 2};
  t.values = {1.0, 2.0, 3.0, 4.0};
  ck.tensors = {t};
  std::string good = tmp / "good.tlck";
  ckpt::write_checkpoint(good, ck);

  // Flipping the format version byte must fail loudly, not misparse.
  const std::string data = slurp(good);
  std::string flipped = data;
  flipped[4] = static_cast<char>(flipped[4] + 1);
  std::string versioned = tmp / "versioned.tlck";
  {
    std::ofstream out(versioned, std::ios::binary);
    out.write(flipped.data(), static_cast<std::streamsize>(flipped.size()));
  }
  CHECK_THROWS_WITH(ckpt::read_checkpoint(versioned),
                    Catch::Matchers::ContainsSubstring("format version"));

  // Truncated payload.
  std::string cut = tmp / "cut.tlck";
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(data.data(), static_cast<std::streamsize>(data.size() - 8));
  }
  CHECK_THROWS_WITH(ckpt::read_checkpoint(cut), Catch::Matchers::ContainsSubstring("truncated"));

  ckpt::Checkpoint bad_shape;
  ckpt::TensorBlock u;
  u.name = "w";
  u.shape = {3};
  u.values = {1.0};
  bad_shape.tensors = {u};
  CHECK_THROWS_AS(ckpt::write_checkpoint(tmp / "bad.tlck", bad_shape), std::invalid_argument);
}

TEST_CASE("matrix checkpoint adapters invert each other", "[config_io]") {
  TempDir tmp;
  la::Mat w(3, 2);
  for (int i = 0; i < 6; ++i) w.data[static_cast<std::size_t>(i)] = 0.5 * i - 1.0;
  ckpt::Checkpoint ck = ckpt::pack_matrix(w, "value_w", {{"n", 3}});
  std::string path = tmp / "w.tlck";
  ckpt::write_checkpoint(path, ck);
  la::Mat back = ckpt::unpack_matrix(ckpt::read_checkpoint(path), "value_w");
  CHECK(back.rows == 3);
  CHECK(back.cols == 2);
  CHECK(back.data == w.data);
  CHECK(ck.meta["n"] == 3);
}

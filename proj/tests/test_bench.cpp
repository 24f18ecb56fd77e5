#include "doctest.h"

#include <clocale>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ncp/bench.hpp"
#include "ncp/rng.hpp"

#include "rank_oracle.hpp"

using namespace ncp;
using namespace ncp::bench;

namespace {

// Compression blocks SHA-256 processes for a message of `bits` bits:
// message, one 1 bit, zero padding, 64-bit length, in 512-bit chunks.
std::size_t sha256_blocks(std::size_t bits) { return (bits + 1 + 64 + 511) / 512; }

BenchConfig small_config(std::size_t iterations) {
  BenchConfig c;
  c.iterations = iterations;
  c.warmup = iterations / 10;
  return c;
}

// Interleaves rounds of two timings and keeps each side's fastest median,
// so a slow phase of the machine cannot land on one side only.
std::pair<double, double> paired_medians(BenchScheme sa, std::size_t la, BenchScheme sb, std::size_t lb,
                                         const BenchConfig& c, int rounds = 7) {
  double a = INFINITY, b = INFINITY;
  for (int r = 0; r < rounds; ++r) {
    a = std::min(a, static_cast<double>(time_keygen(sa, la, c).median_ns));
    b = std::min(b, static_cast<double>(time_keygen(sb, lb, c).median_ns));
  }
  return {a, b};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / ("ncp_bench_" + std::to_string(Rng::mix(
                                                                           reinterpret_cast<std::uintptr_t>(this))));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("scheme names") {
  for (BenchScheme s : kAllSchemes) CHECK(parse_scheme(to_string(s)) == s);
  CHECK_THROWS_AS(parse_scheme("sha512"), BenchError);
  CHECK(field_size(BenchScheme::kNc8) == 256);
  CHECK(field_size(BenchScheme::kNc10) == 1024);
  CHECK(field_size(BenchScheme::kSha1) == 0);
}

TEST_CASE("expected transmissions at the documented field sizes") {
  const EnergyModel m;
  CHECK(m.payload_bits() == 65536);
  CHECK(m.expected_transmissions(256) == doctest::Approx(8.0039).epsilon(1e-5));
  CHECK(m.expected_transmissions(2) == doctest::Approx(9.61).epsilon(1e-3));
  CHECK(m.overhead(256) == doctest::Approx(8.0039 / 8).epsilon(1e-5));
}

TEST_CASE("overhead matches the Monte Carlo rank-growth oracle within 1%") {
  const EnergyModel m;
  Rng rng(2718);
  for (unsigned u : {1u, 2u, 4u, 8u}) {
    const std::uint64_t q = std::uint64_t{1} << u;
    const double mc = oracle::monte_carlo_transmissions(u, m.packets, 100000, rng);
    INFO("q = " << q << ", Monte Carlo " << mc);
    CHECK(std::abs(m.expected_transmissions(q) - mc) / mc < 0.01);
    CHECK(std::abs(m.overhead(q) - mc / 8) / (mc / 8) < 0.01);
  }
}

TEST_CASE("overhead is at least one and strictly decreasing in q") {
  const EnergyModel m;
  double prev = INFINITY;
  for (unsigned u = 1; u <= 16; ++u) {
    const double o = m.overhead(std::uint64_t{1} << u);
    CHECK(o >= 1.0);
    CHECK(o < prev);
    prev = o;
  }
  CHECK_THROWS_AS(m.overhead(1), BenchError);
}

TEST_CASE("transmission term at overhead one") {
  const EnergyModel m;
  CHECK(m.transmission_j(1.0) == 1.31072e-5);
  CHECK(m.energy_j(BenchScheme::kSha256, 0.0) == 1.31072e-5);
  CHECK(m.energy_j(BenchScheme::kNc8, 0.0) == m.transmission_j(m.overhead(256)));
  CHECK_THROWS_AS(m.energy_j(BenchScheme::kMd5, -1.0), BenchError);
}

TEST_CASE("energy is affine in code time and in overhead") {
  Rng rng(6);
  EnergyModel m;
  for (int i = 0; i < 200; ++i) {
    m.p_cpu_w = rng.unit() * 5;
    const double t1 = rng.unit() * 1e-3, t2 = rng.unit() * 1e-3;
    const double a = rng.unit() * 3, b = rng.unit() * 3;
    for (BenchScheme s : kAllSchemes) {
      const double e0 = m.energy_j(s, 0);
      CHECK(m.energy_j(s, t1 + t2) - e0 == doctest::Approx((m.energy_j(s, t1) - e0) + (m.energy_j(s, t2) - e0)));
      CHECK(m.energy_j(s, t1) - e0 == doctest::Approx(m.p_cpu_w * t1));
    }
    CHECK(m.transmission_j(a + b) == doctest::Approx(m.transmission_j(a) + m.transmission_j(b)));
    CHECK(m.transmission_j(0) == 0.0);
  }
}

TEST_CASE("nearest-rank percentiles") {
  std::vector<std::uint64_t> v;
  for (std::uint64_t i = 100; i >= 1; --i) v.push_back(i);
  const auto s = summarize(v);
  CHECK(s.p10_ns == 10);
  CHECK(s.median_ns == 50);
  CHECK(s.p90_ns == 90);
  CHECK(s.samples == 100);
  std::vector<std::uint64_t> one = {7};
  const auto t = summarize(one);
  CHECK((t.p10_ns == 7 && t.median_ns == 7 && t.p90_ns == 7));
}

TEST_CASE("one iteration gives a positive median for every scheme") {
  BenchConfig c;
  c.iterations = 1;
  c.warmup = 0;
  for (BenchScheme s : kAllSchemes) {
    const auto st = time_keygen(s, 50, c);
    CHECK(st.samples == 1);
    CHECK(st.median_ns > 0);
  }
  CHECK_THROWS_AS(time_keygen(BenchScheme::kNc8, 0, c), BenchError);
  CHECK_THROWS_AS(time_keygen(BenchScheme::kNc8, 1100, c), BenchError);
  CHECK_NOTHROW(time_keygen(BenchScheme::kNc10, 1100, c));
}

TEST_CASE("network coding latency barely depends on the field size") {
  const auto [a, b] = paired_medians(BenchScheme::kNc8, 50, BenchScheme::kNc10, 50, small_config(501));
  INFO("nc8 " << a << " ns, nc10 " << b << " ns");
  CHECK(std::max(a, b) / std::min(a, b) < 2.0);
}

TEST_CASE("sha256 processes an extra block from 448 input bits") {
  CHECK(sha256_blocks(440) == 1);
  CHECK(sha256_blocks(447) == 1);
  CHECK(sha256_blocks(448) == 2);
  CHECK(sha256_blocks(0) == 1);
  CHECK(sha256_blocks(959) == 2);
  CHECK(sha256_blocks(960) == 3);

  const auto [one, two] = paired_medians(BenchScheme::kSha256, 440, BenchScheme::kSha256, 448, small_config(1001));
  MESSAGE("sha256 median 440 bits: " << one << " ns, 448 bits: " << two << " ns");
  CHECK(two > one);
}

TEST_CASE("repeated runs with one seed agree within 20%") {
  for (BenchScheme s : {BenchScheme::kNc8, BenchScheme::kSha1}) {
    const auto [a, b] = paired_medians(s, 100, s, 100, small_config(501), 5);
    INFO(to_string(s) << ": " << a << " vs " << b);
    CHECK(std::abs(a - b) / std::min(a, b) <= 0.2);
  }
}

TEST_CASE("bench config") {
  const BenchConfig d;
  REQUIRE(d.imsi_bit_lengths.size() == 20);
  CHECK(d.imsi_bit_lengths.front() == 10);
  CHECK(d.imsi_bit_lengths.back() == 200);
  CHECK(d.schemes.size() == 5);

  const auto j = to_json(d);
  const auto back = config_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.imsi_bit_lengths == d.imsi_bit_lengths);
  CHECK(back.schemes == d.schemes);
  CHECK(back.iterations == d.iterations);

  const auto partial = config_from_json(nlohmann::json::parse(R"({"schemes":["md5"],"iterations":3})"));
  CHECK(partial.schemes == std::vector<BenchScheme>{BenchScheme::kMd5});
  CHECK(partial.imsi_bit_lengths == d.imsi_bit_lengths);

  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"iterations":0})")), BenchError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"imsi_bit_lengths":[10,0]})")), BenchError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"colour":1})")), BenchError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"schemes":["rot13"]})")), BenchError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"iterations":"many"})")), BenchError);
}

TEST_CASE("run_bench emits every scheme and length in order") {
  BenchConfig c;
  c.iterations = 5;
  c.warmup = 1;
  c.imsi_bit_lengths = {200, 10, 50, 10};
  c.schemes = {BenchScheme::kSha256, BenchScheme::kNc10, BenchScheme::kMd5, BenchScheme::kNc8, BenchScheme::kSha1};
  const auto r = run_bench(c);
  REQUIRE(r.rows.size() == 15);
  std::size_t i = 0;
  for (BenchScheme s : kAllSchemes)
    for (std::size_t L : {10u, 50u, 200u}) {
      CHECK(r.rows[i].scheme == to_string(s));
      CHECK(r.rows[i].imsi_bits == L);
      CHECK(r.rows[i].p10_ns <= r.rows[i].median_ns);
      CHECK(r.rows[i].median_ns <= r.rows[i].p90_ns);
      CHECK(r.rows[i].median_ns > 0);
      CHECK(r.rows[i].energy_j > 0);
      ++i;
    }
  CHECK(r.find(BenchScheme::kSha1, 50) != nullptr);
  CHECK(r.find(BenchScheme::kSha1, 60) == nullptr);

  const auto ratios = measured_ratios(r, 50);
  CHECK(ratios.contains("nc10_over_nc8_time"));
  CHECK(ratios.contains("nc8_vs_sha256"));
  CHECK(ratios["nc8_vs_md5"]["time_ratio"].get<double>() > 0);
}

TEST_CASE("csv output") {
  TempDir tmp;
  const auto empty_path = tmp.path / "empty.csv";
  report_csv(BenchReport{}, empty_path);
  std::ifstream in(empty_path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == std::string(kCsvHeader) + "\n");
  CHECK(read_csv(empty_path).rows.empty());

  BenchReport r;
  r.rows = {{"sha1", 20, 300, 250, 400, 1.3107201e-5},
            {"nc8", 200, 9000, 8000, 12000, 0.1 + 0.2},
            {"nc8", 10, 800, 700, 1000, 1.3113597851562499e-05},
            {"md5", 10, 200, 150, 260, 1.31072e-5}};
  r.sort();
  CHECK(r.rows[0].scheme == "nc8");
  CHECK(r.rows[0].imsi_bits == 10);
  CHECK(r.rows[1].imsi_bits == 200);
  CHECK(r.rows[2].scheme == "md5");
  CHECK(r.rows[3].scheme == "sha1");

  const auto path = tmp.path / "r.csv";
  report_csv(r, path);
  CHECK(read_csv(path).rows == r.rows);

  // A comma-decimal locale must not leak into the file.
  if (std::setlocale(LC_ALL, "de_DE.UTF-8") != nullptr) {
    CHECK(to_csv(r).find("0.30000000000000004") != std::string::npos);
    std::setlocale(LC_ALL, "C");
  }
  CHECK(to_csv(r).find("0.30000000000000004") != std::string::npos);

  CHECK_THROWS(parse_csv("scheme,bits\n"));
  CHECK_THROWS(parse_csv(std::string(kCsvHeader) + "\nnc8,10,1,2\n"));
  CHECK_THROWS(parse_csv(std::string(kCsvHeader) + "\nnc8,ten,1,2,3,0.5\n"));
  CHECK_THROWS(report_csv(r, tmp.path / "missing" / "dir" / "r.csv"));
}

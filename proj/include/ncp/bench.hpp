#pragma once

// Key-generation latency across schemes and IMSI lengths, and an energy
// model combining CPU time with radio transmission cost.
//
// Network coding at IMSI length L uses m = ceil(L/u), n = 2m, k = m, p = 0
// with a watchword of m symbols, so every L in 10..200 is representable at
// u = 8 and u = 10. A timed run is one full tier-1 plus tier-2 derivation
// on pregenerated inputs. A hash run is one digest of the L-bit IMSI,
// truncated to min(L, digest length) bits.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ncp::bench {

class BenchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BenchScheme { kNc8, kNc10, kMd5, kSha1, kSha256 };

inline constexpr BenchScheme kAllSchemes[] = {BenchScheme::kNc8, BenchScheme::kNc10, BenchScheme::kMd5,
                                              BenchScheme::kSha1, BenchScheme::kSha256};

std::string_view to_string(BenchScheme s);
// "nc8", "nc10", "md5", "sha1", "sha256"; throws BenchError otherwise.
BenchScheme parse_scheme(std::string_view name);
bool is_network_coding(BenchScheme s);
// 2^u for network coding, 0 for hashes.
std::uint64_t field_size(BenchScheme s);

struct BenchConfig {
  std::vector<std::size_t> imsi_bit_lengths = default_lengths();
  std::vector<BenchScheme> schemes = {std::begin(kAllSchemes), std::end(kAllSchemes)};
  std::size_t iterations = 101;
  std::size_t warmup = 10;
  std::uint64_t seed = 1;
  double p_cpu_w = 1.0;

  static std::vector<std::size_t> default_lengths();  // 10, 20, ..., 200
  void validate() const;
};

nlohmann::ordered_json to_json(const BenchConfig& cfg);
// Missing fields keep their defaults; unknown fields throw BenchError.
BenchConfig config_from_json(const nlohmann::json& j, BenchConfig base = {});

struct LatencyStats {
  std::uint64_t median_ns = 0;
  std::uint64_t p10_ns = 0;
  std::uint64_t p90_ns = 0;
  std::size_t samples = 0;
};

// Nearest-rank percentiles of the samples (sorted in place).
LatencyStats summarize(std::vector<std::uint64_t>& samples_ns);

// Inputs are drawn from (seed, imsi_bits) alone, so every scheme sees the
// same IMSIs. Throws BenchError for unsupported lengths.
LatencyStats time_keygen(BenchScheme scheme, std::size_t imsi_bits, const BenchConfig& config);

struct EnergyModel {
  double e_bit_pj = 200;
  std::size_t packets = 8;          // g
  std::size_t packet_bytes = 1024;
  double p_cpu_w = 1.0;

  std::uint64_t payload_bits() const { return static_cast<std::uint64_t>(packets) * packet_bytes * 8; }

  // Expected number of uniformly random vectors in F_q^g drawn until they
  // span the space: sum_{r=0}^{g-1} 1 / (1 - q^{r-g}).
  double expected_transmissions(std::uint64_t q) const;
  // Transmissions per innovative packet, expected_transmissions / g.
  double overhead(std::uint64_t q) const;
  // e_bit * payload_bits * overhead, in joules.
  double transmission_j(double overhead_factor) const;
  // p_cpu * code_time + transmission_j(overhead), overhead 1 for hashes.
  double energy_j(BenchScheme scheme, double code_time_s) const;
};

struct BenchRow {
  std::string scheme;
  std::size_t imsi_bits = 0;
  std::uint64_t median_ns = 0;
  std::uint64_t p10_ns = 0;
  std::uint64_t p90_ns = 0;
  double energy_j = 0;

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  // Scheme in canonical order, then bits ascending.
  void sort();
  const BenchRow* find(BenchScheme scheme, std::size_t imsi_bits) const;
};

BenchReport run_bench(const BenchConfig& config);

inline constexpr std::string_view kCsvHeader = "scheme,imsi_bits,median_ns,p10_ns,p90_ns,energy_j";

std::string to_csv(const BenchReport& report);
BenchReport parse_csv(std::string_view text);
// Throws std::runtime_error on I/O failure.
void report_csv(const BenchReport& report, const std::filesystem::path& path);
BenchReport read_csv(const std::filesystem::path& path);

// Measured ratios at one IMSI length: per hash scheme, nc8 median over the
// hash median and nc8 energy over the hash energy, plus nc10 over nc8.
// Schemes absent from the report are omitted.
nlohmann::ordered_json measured_ratios(const BenchReport& report, std::size_t imsi_bits);

}  // namespace ncp::bench

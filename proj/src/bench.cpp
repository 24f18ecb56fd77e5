#include "ncp/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ncp/keygen.hpp"
#include "ncp/rng.hpp"

namespace ncp::bench {

namespace {

using Clock = std::chrono::steady_clock;

unsigned field_bits(BenchScheme s) { return s == BenchScheme::kNc8 ? 8 : 10; }

DigestAlgorithm digest_of(BenchScheme s) {
  switch (s) {
    case BenchScheme::kMd5:
      return DigestAlgorithm::kMd5;
    case BenchScheme::kSha1:
      return DigestAlgorithm::kSha1;
    default:
      return DigestAlgorithm::kSha256;
  }
}

std::size_t scheme_rank(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kAllSchemes); ++i)
    if (to_string(kAllSchemes[i]) == name) return i;
  return std::size(kAllSchemes);
}

std::vector<bool> random_bits(std::size_t count, Rng& rng) {
  std::vector<bool> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = rng.coin();
  return bits;
}

std::vector<std::uint8_t> to_bytes(const std::vector<bool>& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
  return out;
}

// Keeps the timed work observable.
volatile std::uint8_t g_sink = 0;

template <typename F>
std::vector<std::uint64_t> time_runs(std::size_t warmup, std::size_t iterations, F&& run) {
  std::vector<std::uint64_t> samples;
  samples.reserve(iterations);
  for (std::size_t i = 0; i < warmup + iterations; ++i) {
    const auto t0 = Clock::now();
    run(i);
    const auto t1 = Clock::now();
    if (i >= warmup) {
      samples.push_back(
          static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
  }
  return samples;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(BenchScheme s) {
  switch (s) {
    case BenchScheme::kNc8:
      return "nc8";
    case BenchScheme::kNc10:
      return "nc10";
    case BenchScheme::kMd5:
      return "md5";
    case BenchScheme::kSha1:
      return "sha1";
    case BenchScheme::kSha256:
      return "sha256";
  }
  return "?";
}

BenchScheme parse_scheme(std::string_view name) {
  for (BenchScheme s : kAllSchemes)
    if (to_string(s) == name) return s;
  throw BenchError("unsupported scheme: " + std::string(name));
}

bool is_network_coding(BenchScheme s) { return s == BenchScheme::kNc8 || s == BenchScheme::kNc10; }

std::uint64_t field_size(BenchScheme s) { return is_network_coding(s) ? std::uint64_t{1} << field_bits(s) : 0; }

std::vector<std::size_t> BenchConfig::default_lengths() {
  std::vector<std::size_t> v;
  for (std::size_t L = 10; L <= 200; L += 10) v.push_back(L);
  return v;
}

void BenchConfig::validate() const {
  if (iterations < 1) throw BenchError("iterations must be at least 1");
  if (schemes.empty()) throw BenchError("no schemes selected");
  for (std::size_t L : imsi_bit_lengths)
    if (L == 0) throw BenchError("IMSI bit lengths must be positive");
  if (!(p_cpu_w >= 0) || !std::isfinite(p_cpu_w)) throw BenchError("p_cpu_w must be a finite nonnegative power");
}

nlohmann::ordered_json to_json(const BenchConfig& cfg) {
  nlohmann::ordered_json j;
  j["imsi_bit_lengths"] = cfg.imsi_bit_lengths;
  auto& s = j["schemes"] = nlohmann::ordered_json::array();
  for (BenchScheme x : cfg.schemes) s.push_back(std::string(to_string(x)));
  j["iterations"] = cfg.iterations;
  j["warmup"] = cfg.warmup;
  j["seed"] = cfg.seed;
  j["p_cpu_w"] = cfg.p_cpu_w;
  return j;
}

BenchConfig config_from_json(const nlohmann::json& j, BenchConfig base) {
  if (!j.is_object()) throw BenchError("bench config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "imsi_bit_lengths") {
        base.imsi_bit_lengths = value.get<std::vector<std::size_t>>();
      } else if (key == "schemes") {
        base.schemes.clear();
        for (const auto& s : value) base.schemes.push_back(parse_scheme(s.get<std::string>()));
      } else if (key == "iterations") {
        base.iterations = value.get<std::size_t>();
      } else if (key == "warmup") {
        base.warmup = value.get<std::size_t>();
      } else if (key == "seed") {
        base.seed = value.get<std::uint64_t>();
      } else if (key == "p_cpu_w") {
        base.p_cpu_w = value.get<double>();
      } else {
        throw BenchError("unknown bench config field: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BenchError(std::string("bad bench config: ") + e.what());
  }
  base.validate();
  return base;
}

LatencyStats summarize(std::vector<std::uint64_t>& samples_ns) {
  LatencyStats s;
  s.samples = samples_ns.size();
  if (samples_ns.empty()) return s;
  std::sort(samples_ns.begin(), samples_ns.end());
  const auto rank = [&](double pct) {
    const auto r = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(samples_ns.size())));
    return samples_ns[std::clamp<std::size_t>(r, 1, samples_ns.size()) - 1];
  };
  s.p10_ns = rank(10);
  s.median_ns = rank(50);
  s.p90_ns = rank(90);
  return s;
}

LatencyStats time_keygen(BenchScheme scheme, std::size_t imsi_bits, const BenchConfig& config) {
  if (imsi_bits == 0) throw BenchError("IMSI bit length must be positive");
  const std::size_t runs = config.warmup + config.iterations;
  if (config.iterations < 1) throw BenchError("iterations must be at least 1");

  Rng imsi_rng(Rng::mix(Rng::substream(config.seed, "bench").next() ^ imsi_bits));
  std::vector<std::vector<bool>> imsis;
  imsis.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) imsis.push_back(random_bits(imsi_bits, imsi_rng));

  std::vector<std::uint64_t> samples;
  if (is_network_coding(scheme)) {
    using namespace keygen;
    const Field field(field_bits(scheme));
    const std::size_t m = (imsi_bits + field.u() - 1) / field.u();
    if (2 * m > field.q()) throw BenchError("IMSI too long for the field");
    const auto params = KeygenParams::make(field, 2 * m, m, m, 0);
    const TwoTierCoder coder(params);

    Rng extra(Rng::mix(Rng::substream(config.seed, "bench").next() ^ imsi_bits ^ (field.u() << 20)));
    std::vector<Identity> ids;
    std::vector<Watchword> words;
    std::vector<Seed> seeds;
    for (std::size_t i = 0; i < runs; ++i) {
      ids.push_back(Identity::from_symbols(SymbolVector(field, pack_bits(field, imsis[i]))));
      words.push_back(Watchword{Seed::random(field, m, extra).symbols});
      seeds.push_back(Seed::random(field, m, extra));
    }
    samples = time_runs(config.warmup, config.iterations, [&](std::size_t i) {
      const auto b = mix_tier1(ids[i], words[i], params);
      const auto ka = derive_keyA(b, coder.matrix(), params);
      const auto b2 = mix_tier2(ka, seeds[i], params);
      const auto kb = derive_keyB(b2, coder.matrix(), params, 0);
      g_sink = static_cast<std::uint8_t>(g_sink ^ kb.material.front());
    });
  } else {
    const DigestAlgorithm algo = digest_of(scheme);
    const std::size_t out_bits = std::min(imsi_bits, digest_bits(algo));
    std::vector<std::vector<std::uint8_t>> inputs;
    inputs.reserve(runs);
    for (const auto& bits : imsis) inputs.push_back(to_bytes(bits));
    samples = time_runs(config.warmup, config.iterations, [&](std::size_t i) {
      const auto key = keygen::hash_pseudonym(inputs[i], algo, out_bits);
      g_sink = static_cast<std::uint8_t>(g_sink ^ key.material.front());
    });
  }
  return summarize(samples);
}

double EnergyModel::expected_transmissions(std::uint64_t q) const {
  if (q < 2) throw BenchError("field size must be at least 2");
  double sum = 0;
  const double qd = static_cast<double>(q);
  for (std::size_t r = 0; r < packets; ++r) {
    sum += 1.0 / (1.0 - std::pow(qd, static_cast<double>(r) - static_cast<double>(packets)));
  }
  return sum;
}

double EnergyModel::overhead(std::uint64_t q) const {
  return expected_transmissions(q) / static_cast<double>(packets);
}

double EnergyModel::transmission_j(double overhead_factor) const {
  // Summed in picojoules so the overhead-1 term is a single rounding.
  return e_bit_pj * static_cast<double>(payload_bits()) * overhead_factor / 1e12;
}

double EnergyModel::energy_j(BenchScheme scheme, double code_time_s) const {
  if (code_time_s < 0) throw BenchError("code time must be nonnegative");
  const double factor = is_network_coding(scheme) ? overhead(field_size(scheme)) : 1.0;
  return p_cpu_w * code_time_s + transmission_j(factor);
}

void BenchReport::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    const auto ra = scheme_rank(a.scheme), rb = scheme_rank(b.scheme);
    if (ra != rb) return ra < rb;
    if (a.scheme != b.scheme) return a.scheme < b.scheme;
    return a.imsi_bits < b.imsi_bits;
  });
}

const BenchRow* BenchReport::find(BenchScheme scheme, std::size_t imsi_bits) const {
  for (const auto& r : rows)
    if (r.scheme == to_string(scheme) && r.imsi_bits == imsi_bits) return &r;
  return nullptr;
}

BenchReport run_bench(const BenchConfig& config) {
  config.validate();
  EnergyModel model;
  model.p_cpu_w = config.p_cpu_w;
  std::vector<std::size_t> lengths = config.imsi_bit_lengths;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  std::vector<BenchScheme> schemes = config.schemes;
  std::sort(schemes.begin(), schemes.end());
  schemes.erase(std::unique(schemes.begin(), schemes.end()), schemes.end());

  BenchReport report;
  for (BenchScheme s : schemes)
    for (std::size_t L : lengths) {
      const auto stats = time_keygen(s, L, config);
      report.rows.push_back({std::string(to_string(s)), L, stats.median_ns, stats.p10_ns, stats.p90_ns,
                             model.energy_j(s, static_cast<double>(stats.median_ns) * 1e-9)});
    }
  report.sort();
  return report;
}

std::string to_csv(const BenchReport& report) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : report.rows) {
    out += r.scheme + ',' + std::to_string(r.imsi_bits) + ',' + std::to_string(r.median_ns) + ',' +
           std::to_string(r.p10_ns) + ',' + std::to_string(r.p90_ns) + ',' + format_double(r.energy_j) + '\n';
  }
  return out;
}

BenchReport parse_csv(std::string_view text) {
  BenchReport report;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kCsvHeader) throw std::runtime_error("csv header mismatch");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    for (std::size_t start = 0;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected 6 fields");
    report.rows.push_back({std::string(f[0]), parse_number<std::size_t>(f[1], line_no),
                           parse_number<std::uint64_t>(f[2], line_no), parse_number<std::uint64_t>(f[3], line_no),
                           parse_number<std::uint64_t>(f[4], line_no), parse_number<double>(f[5], line_no)});
  }
  if (line_no == 0) throw std::runtime_error("csv is empty");
  return report;
}

void report_csv(const BenchReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_csv(report);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

BenchReport read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

nlohmann::ordered_json measured_ratios(const BenchReport& report, std::size_t imsi_bits) {
  nlohmann::ordered_json j;
  j["imsi_bits"] = imsi_bits;
  const BenchRow* nc8 = report.find(BenchScheme::kNc8, imsi_bits);
  const BenchRow* nc10 = report.find(BenchScheme::kNc10, imsi_bits);
  if (nc8 && nc10 && nc8->median_ns > 0) {
    j["nc10_over_nc8_time"] = static_cast<double>(nc10->median_ns) / static_cast<double>(nc8->median_ns);
  }
  if (!nc8) return j;
  for (BenchScheme h : {BenchScheme::kMd5, BenchScheme::kSha1, BenchScheme::kSha256}) {
    const BenchRow* row = report.find(h, imsi_bits);
    if (!row || row->median_ns == 0) continue;
    const double t = static_cast<double>(nc8->median_ns) / static_cast<double>(row->median_ns);
    auto& e = j[std::string("nc8_vs_") + std::string(to_string(h))];
    e["time_ratio"] = t;
    e["time_reduction"] = 1.0 - t;
    e["energy_ratio"] = nc8->energy_j / row->energy_j;
    e["energy_reduction"] = 1.0 - nc8->energy_j / row->energy_j;
  }
  return j;
}

}  // namespace ncp::bench

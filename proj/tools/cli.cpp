#include "cli.hpp"

#include <bit>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ncp/bench.hpp"
#include "ncp/keygen.hpp"
#include "ncp/oracle.hpp"
#include "ncp/protocol.hpp"
#include "ncp/rng.hpp"
#include "ncp/simulation.hpp"

namespace ncp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Bad input that is the caller's fault.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
};

json load_config(const Globals& g) {
  if (!g.config) return json::object();
  std::ifstream in(*g.config, std::ios::binary);
  if (!in) throw UsageError("cannot open config " + *g.config);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + *g.config + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

template <typename T>
T config_value(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config field ") + key + " has the wrong type");
  }
}

// The flag if given, else the config field if present.
template <typename T>
std::optional<T> flag_or_config(const std::optional<T>& flag, const json& cfg, const char* key) {
  if (flag) return flag;
  if (cfg.contains(key)) return config_value<T>(cfg, key, T{});
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// keygen

struct KeygenArgs {
  std::optional<std::string> imsi;
  std::optional<std::string> watchword;
  std::optional<std::string> key_a;
  std::optional<unsigned> u;
  std::optional<std::size_t> n;
  std::optional<std::size_t> p;
  std::optional<std::string> scheme;
  std::optional<std::size_t> bits;
};

int cmd_keygen(const KeygenArgs& a, const Globals& g, std::ostream& out) {
  using namespace keygen;
  const json cfg = load_config(g);
  for (const auto& [key, value] : cfg.items()) {
    static const std::set<std::string> known = {"imsi", "watchword", "key_a", "u", "n", "p", "scheme", "bits"};
    if (!known.count(key)) throw UsageError("unknown keygen config field: " + key);
  }
  const auto imsi = flag_or_config(a.imsi, cfg, "imsi");
  const auto watchword = flag_or_config(a.watchword, cfg, "watchword");
  const auto key_a_hex = flag_or_config(a.key_a, cfg, "key_a");
  const unsigned u = flag_or_config(a.u, cfg, "u").value_or(8);
  const std::string scheme = flag_or_config(a.scheme, cfg, "scheme").value_or("nc");
  const std::size_t offset = flag_or_config(a.p, cfg, "p").value_or(0);

  if (u < 1 || u > 16) throw UsageError("u must be in [1, 16]");
  if (imsi) {
    if (imsi->empty() || imsi->size() > 19 || imsi->find_first_not_of("0123456789") != std::string::npos) {
      throw UsageError("IMSI must be 1 to 19 decimal digits");
    }
    if (!watchword) throw UsageError("--imsi needs --watchword");
  } else if (!key_a_hex) {
    throw UsageError("nothing to derive: give --imsi and --watchword, or --key-a with --seed");
  }

  ordered_json report;
  report["scheme"] = scheme;
  const Field field(u);

  if (scheme != "nc") {
    DigestAlgorithm algo;
    try {
      algo = parse_digest_algorithm(scheme);
    } catch (const std::invalid_argument&) {
      throw UsageError("unknown scheme " + scheme + " (nc, md5, sha1, sha256)");
    }
    if (!imsi) throw UsageError("hash schemes need --imsi and --watchword");
    const std::size_t imsi_bits = imsi_bit_length(imsi->size());
    if (watchword->size() * 8 < imsi_bits) throw KeygenError("watchword too short");
    const std::size_t bits =
        flag_or_config(a.bits, cfg, "bits").value_or(std::min(imsi_bits, digest_bits(algo)));
    std::vector<std::uint8_t> input(imsi->begin(), imsi->end());
    input.insert(input.end(), watchword->begin(), watchword->end());
    const Key k = hash_pseudonym(input, algo, bits);
    report["bits"] = bits;
    report["key_a"] = k.hex();
    out << report.dump(2) << '\n';
    return kPass;
  }

  std::optional<Key> key_a;
  std::size_t m = 0, default_n = 14;
  if (imsi) {
    m = (imsi_bit_length(imsi->size()) + u - 1) / u;
    // Room for the whole watchword: n - m >= its symbol count, with k = n / 2 >= m.
    default_n = 2 * std::max(m, (watchword->size() * 8 + u - 1) / u);
  }
  const std::size_t n = flag_or_config(a.n, cfg, "n").value_or(default_n);
  if (n % 2 != 0) throw UsageError("n must be even");
  if (imsi && n < 2 * m) throw UsageError("n must be at least " + std::to_string(2 * m) + " for this IMSI");
  const KeygenParams params = KeygenParams::make(field, n, n / 2, imsi ? m : n / 2, offset);
  const TwoTierCoder coder(params);
  report["u"] = u;
  report["n"] = params.n;
  report["k"] = params.k;
  report["m"] = params.m;
  report["p"] = params.p;

  if (imsi) {
    const Identity id = Identity::from_digits(field, *imsi);
    const Watchword w = Watchword::from_text(field, *watchword, params.n - params.m, id.bit_length());
    key_a = coder.key_a(id, w);
    report["key_a"] = key_a->hex();
  } else {
    std::vector<std::uint8_t> material;
    try {
      material = from_hex(*key_a_hex);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--key-a: ") + e.what());
    }
    key_a = Key{Scheme::kNetworkCoding, KeyRole::kKeyA, std::move(material)};
    if (key_a->material.size() != params.k * field.symbol_bytes()) {
      throw UsageError("--key-a must hold k = " + std::to_string(params.k) + " symbols");
    }
    for (Symbol s : key_a->symbols(field).symbols)
      if (!field.contains(s)) throw UsageError("--key-a has a symbol outside the field");
  }

  if (g.seed) {
    Rng rng = Rng::substream(*g.seed, "keygen");
    const Key kb = coder.key_b(*key_a, rng);
    report["seed"] = *g.seed;
    report["key_b"] = kb.hex();
  }
  out << report.dump(2) << '\n';
  return kPass;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::optional<std::uint64_t> ticks;
  std::optional<std::size_t> groups;
  std::optional<std::size_t> members;
  std::optional<std::string> level;
  std::optional<std::string> tolerance;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out) {
  sim::SimulationConfig cfg;
  json overrides = load_config(g);
  if (g.seed) overrides["seed"] = *g.seed;
  if (a.ticks) overrides["ticks"] = *a.ticks;
  if (a.groups) overrides["groups"] = *a.groups;
  if (a.members) overrides["members_per_group"] = *a.members;
  if (a.level) overrides["level"] = *a.level;
  if (a.tolerance) {
    if (*a.tolerance == "inf") {
      overrides["tolerance_distance"] = "inf";
    } else {
      try {
        overrides["tolerance_distance"] = std::stod(*a.tolerance);
      } catch (const std::exception&) {
        throw UsageError("--tolerance must be a number or inf");
      }
    }
  }
  try {
    cfg = sim::config_from_json(overrides);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const fs::path dir = g.out.value_or("simulation");
  fs::create_directories(dir);
  const auto result = sim::run_simulation(cfg, dir);

  ordered_json report;
  report["out"] = dir.string();
  report["summary"] = result.event_log["summary"];
  report["eavesdrop"] = result.event_log["eavesdrop"];
  const bool passed = result.store_violations == 0 && result.uncloak_mismatches == 0 &&
                      result.keyb_collisions == 0 && result.live_sessions_after_teardown == 0 &&
                      result.engine_bytes_after_teardown == 0;
  report["passed"] = passed;
  out << report.dump(2) << '\n';
  return passed ? kPass : kCheckFailed;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
  std::optional<std::uint64_t> q;
  std::optional<std::size_t> n, k, m, subsets;
  std::optional<std::uint64_t> trials;
};

int cmd_oracle(const OracleArgs& a, const Globals& g, std::ostream& out) {
  const json cfg = load_config(g);
  for (const auto& [key, value] : cfg.items()) {
    static const std::set<std::string> known = {"q", "n", "k", "m", "subsets", "trials"};
    if (!known.count(key)) throw UsageError("unknown oracle config field: " + key);
  }
  oracle::OracleReportConfig rc;
  const std::uint64_t q = a.q.value_or(config_value<std::uint64_t>(cfg, "q", std::uint64_t{1} << rc.u));
  if (q < 2 || q > (1u << 16) || (q & (q - 1)) != 0) throw UsageError("q must be a power of two in [2, 65536]");
  rc.u = static_cast<unsigned>(std::countr_zero(q));
  rc.n = a.n.value_or(config_value<std::size_t>(cfg, "n", rc.n));
  rc.k = a.k.value_or(config_value<std::size_t>(cfg, "k", rc.k));
  rc.m = a.m.value_or(config_value<std::size_t>(cfg, "m", rc.m));
  rc.subsets = a.subsets.value_or(config_value<std::size_t>(cfg, "subsets", rc.subsets));
  rc.trials = a.trials.value_or(config_value<std::uint64_t>(cfg, "trials", rc.trials));

  Rng rng = Rng::substream(g.seed.value_or(1), "oracle");
  ordered_json report;
  try {
    report = oracle::oracle_report(rc, rng);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::string text = report.dump(2) + '\n';
  if (g.out) write_text(*g.out, text);
  out << text;
  return report["passed"].get<bool>() ? kPass : kCheckFailed;
}

// ---------------------------------------------------------------------------
// audit

struct AuditArgs {
  std::optional<std::string> dir;
  std::optional<std::string> registry;
  std::optional<std::string> odb;
};

int cmd_audit(const AuditArgs& a, const Globals& g, std::ostream& out) {
  const fs::path dir = a.dir.value_or("simulation");
  const fs::path registry = a.registry ? fs::path(*a.registry) : dir / "registry.jsonl";
  const fs::path odb = a.odb ? fs::path(*a.odb) : dir / "odb.jsonl";
  for (const auto& p : {registry, odb})
    if (!fs::is_regular_file(p)) throw UsageError("no such store file: " + p.string());

  const auto report = protocol::audit_files(registry, odb);
  ordered_json j = report.to_json();
  const std::string text = j.dump(2) + '\n';
  if (g.out) write_text(*g.out, text);
  out << text;
  return report.passed() ? kPass : kCheckFailed;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> warmup;
  std::vector<std::string> schemes;
  std::vector<std::size_t> lengths;
};

int cmd_bench(const BenchArgs& a, const Globals& g, std::ostream& out) {
  bench::BenchConfig cfg;
  try {
    cfg = bench::config_from_json(load_config(g));
    if (g.seed) cfg.seed = *g.seed;
    if (a.iterations) cfg.iterations = *a.iterations;
    if (a.warmup) cfg.warmup = *a.warmup;
    if (!a.schemes.empty()) {
      cfg.schemes.clear();
      for (const auto& s : a.schemes) cfg.schemes.push_back(bench::parse_scheme(s));
    }
    if (!a.lengths.empty()) cfg.imsi_bit_lengths = a.lengths;
    cfg.validate();
  } catch (const bench::BenchError& e) {
    throw UsageError(e.what());
  }

  const auto report = bench::run_bench(cfg);
  std::size_t expected_rows = 0;
  {
    std::set<bench::BenchScheme> s(cfg.schemes.begin(), cfg.schemes.end());
    std::set<std::size_t> l(cfg.imsi_bit_lengths.begin(), cfg.imsi_bit_lengths.end());
    expected_rows = s.size() * l.size();
  }
  bool complete = report.rows.size() == expected_rows;
  for (const auto& r : report.rows)
    complete = complete && r.p10_ns <= r.median_ns && r.median_ns <= r.p90_ns && r.energy_j >= 0;

  if (!g.out) {
    out << bench::to_csv(report);
    return complete ? kPass : kCheckFailed;
  }
  if (fs::path(*g.out).has_parent_path()) fs::create_directories(fs::path(*g.out).parent_path());
  bench::report_csv(report, *g.out);

  ordered_json summary;
  summary["csv"] = *g.out;
  summary["rows"] = report.rows.size();
  summary["config"] = bench::to_json(cfg);
  const bench::EnergyModel model{200, 8, 1024, cfg.p_cpu_w};
  auto& oh = summary["overhead"];
  for (std::uint64_t q : {2u, 4u, 16u, 256u, 1024u}) oh[std::to_string(q)] = model.overhead(q);
  auto& ratios = summary["measured_ratios"] = ordered_json::array();
  for (std::size_t L : cfg.imsi_bit_lengths) ratios.push_back(bench::measured_ratios(report, L));
  summary["complete"] = complete;
  out << summary.dump(2) << '\n';
  return complete ? kPass : kCheckFailed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-tier network-coding pseudonyms: key derivation, protocol simulation, security oracles, "
               "store audits and benchmarks.",
               "ncp"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master RNG seed");
  app.add_option("--config", g.config, "JSON config file; flags override its values");
  app.add_option("--out", g.out, "Output path (file or directory, per subcommand)");

  KeygenArgs ka;
  auto* keygen = app.add_subcommand("keygen", "Derive KeyA from an IMSI and watchword, and KeyB when --seed is set");
  keygen->add_option("--imsi", ka.imsi, "IMSI digits");
  keygen->add_option("--watchword", ka.watchword, "Watchword text");
  keygen->add_option("--key-a", ka.key_a, "Existing KeyA hex, to derive only KeyB");
  keygen->add_option("--u", ka.u, "Field exponent, q = 2^u (default 8)");
  keygen->add_option("--n", ka.n, "Code length (default 2m)");
  keygen->add_option("--p", ka.p, "KeyA segment offset (default 0)");
  keygen->add_option("--scheme", ka.scheme, "nc (default), md5, sha1 or sha256");
  keygen->add_option("--bits", ka.bits, "Truncated digest length for hash schemes");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run the protocol simulation and write stores and the event log");
  simulate->add_option("--ticks", sa.ticks);
  simulate->add_option("--groups", sa.groups);
  simulate->add_option("--members", sa.members, "Members per group");
  simulate->add_option("--level", sa.level, "exact, street or city");
  simulate->add_option("--tolerance", sa.tolerance, "Tolerance distance, or inf");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive mutual-information, balancedness and distinguisher checks");
  oracle->add_option("--q", oa.q, "Field size (power of two)");
  oracle->add_option("--n", oa.n);
  oracle->add_option("--k", oa.k);
  oracle->add_option("--m", oa.m);
  oracle->add_option("--subsets", oa.subsets, "Subsets per offset");
  oracle->add_option("--trials", oa.trials, "Distinguisher trials per adversary");

  AuditArgs aa;
  auto* audit = app.add_subcommand("audit", "Check that the ODB cannot be joined with the registry");
  audit->add_option("--dir", aa.dir, "Directory holding registry.jsonl and odb.jsonl (default simulation)");
  audit->add_option("--registry", aa.registry);
  audit->add_option("--odb", aa.odb);

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Key-generation latency and energy; CSV to --out or stdout");
  bench_cmd->add_option("--iterations", ba.iterations);
  bench_cmd->add_option("--warmup", ba.warmup);
  bench_cmd->add_option("--schemes", ba.schemes, "nc8 nc10 md5 sha1 sha256")->delimiter(',');
  bench_cmd->add_option("--lengths", ba.lengths, "IMSI bit lengths")->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsageError;
  }

  try {
    if (*keygen) return cmd_keygen(ka, g, out);
    if (*simulate) return cmd_simulate(sa, g, out);
    if (*oracle) return cmd_oracle(oa, g, out);
    if (*audit) return cmd_audit(aa, g, out);
    return cmd_bench(ba, g, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
}

}  // namespace ncp::cli

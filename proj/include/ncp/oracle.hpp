#pragma once

// Exhaustive checks of the scheme's information-theoretic claims at small
// parameters: mutual information between a code segment and any m input
// positions, watchword balancedness, the same-IMSI distinguisher game, and
// the reduced-system substitution identity.
//
// Shapes here are more general than KeygenParams (any 1 <= k <= n,
// 1 <= m <= n) so the whole parameter space can be swept.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncp/keygen.hpp"
#include "ncp/linalg.hpp"
#include "ncp/protocol.hpp"
#include "ncp/rng.hpp"

namespace ncp::oracle {

using linalg::ReducedSystem;
using linalg::SymbolVector;
using linalg::VandermondeMatrix;

class EnumerationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exact likelihood arithmetic needs more than 64 bits at q^n near 2^20.
__extension__ typedef unsigned __int128 Wide;

// Largest number of input vectors any exhaustive routine will visit.
inline constexpr std::uint64_t kEnumerationLimit = std::uint64_t{1} << 20;

// Code length n, segment length k, secret length m, segment offset p.
struct Shape {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t m = 0;
  std::size_t p = 0;

  // Throws std::invalid_argument unless n == a.n(), 1 <= k <= n,
  // 1 <= m <= n and p <= n - k.
  void validate(const VandermondeMatrix& a) const;
};

// n < q gives the default nonzero points; n == q needs zero as a point.
VandermondeMatrix oracle_matrix(const gf::Field& field, std::size_t n);

// ---------------------------------------------------------------------------
// Mutual information

struct MutualInfoResult {
  double bits = 0;
  std::uint64_t q = 0;
  std::size_t n = 0, k = 0, m = 0, p = 0;
  std::vector<std::size_t> subset;  // 1-based positions
  std::string method = "exhaustive";
  std::uint64_t inputs = 0;         // vectors enumerated
  std::uint64_t joint_classes = 0;  // distinct (segment, secret) pairs
};

// I(c_{p+1..p+k}; b restricted to subset) in bits under uniform b, from
// exact joint counts. subset holds distinct 1-based positions.
MutualInfoResult brute_mutual_info(const VandermondeMatrix& a, std::size_t p, std::size_t k,
                                   std::span<const std::size_t> subset);

// 0 if m <= n - k, else (m - n + k) log2 q.
double closed_form_mi(std::uint64_t q, std::size_t n, std::size_t k, std::size_t m);

// Whether the segment rows have full rank k and the columns outside the
// subset have rank min(k, n - m), the linear-algebra condition under which
// the closed form holds. True for every subset when all points are nonzero.
bool closed_form_applies(const VandermondeMatrix& a, std::size_t p, std::size_t k,
                         std::span<const std::size_t> subset);

// I(KeyB segment; IMSI) through both tiers: b = (IMSI | watchword) gives
// KeyA = c_{p+1..p+k}, b' = (KeyA | seed) gives KeyB = c'_{p2+1..p2+k}.
// Requires k <= n - 1 so the seed is nonempty.
MutualInfoResult brute_chain_mutual_info(const VandermondeMatrix& a, const Shape& shape, std::size_t p2);

// The first-m subset, then distinct random subsets up to `count` (all of
// them when fewer exist).
std::vector<std::vector<std::size_t>> pick_subsets(std::size_t n, std::size_t m, std::size_t count, Rng& rng);

struct SweepRow {
  MutualInfoResult measured;
  double closed_form = 0;
  bool applies = true;
  bool passed() const;
};

// Every (n, k, m, p) for the field with n <= max_n and n < q, with
// `subsets_per_m` subsets each.
std::vector<SweepRow> sweep_closed_form(const gf::Field& field, std::size_t max_n, std::size_t subsets_per_m,
                                    Rng& rng);

// ---------------------------------------------------------------------------
// Balancedness

// Number of watchwords w with c_{p+1..p+k}(imsi | w) == observed.
std::uint64_t consistency_count(const SymbolVector& observed, const SymbolVector& imsi_candidate,
                                const VandermondeMatrix& a, const Shape& shape);

// counts[segment][imsi] over all q^n inputs, segments and IMSIs indexed in
// base q (first symbol most significant).
struct BalanceTable {
  std::uint64_t q = 0;
  std::size_t k = 0, m = 0;
  std::vector<std::vector<std::uint64_t>> counts;

  // Every segment row is constant across IMSIs.
  bool balanced() const;
  // Rows where some IMSIs are consistent and others are not.
  std::size_t mixed_rows() const;
};

BalanceTable balance_table(const VandermondeMatrix& a, const Shape& shape);

// ---------------------------------------------------------------------------
// Distinguisher game

struct GameShape {
  Shape tier1;      // KeyA: (IMSI | watchword), offset p
  std::size_t p2 = 0;  // KeyB offset in (KeyA | seed)
};

struct GameInstance {
  SymbolVector key_a_i;
  SymbolVector key_b_j;
  // Ground truth. Honest adversaries must not read it.
  bool same = false;
};

GameInstance generate_instance(const VandermondeMatrix& a, const GameShape& shape, Rng& rng);

// Returns the guess "same IMSI".
using Adversary = std::function<bool(const GameInstance&, Rng&)>;

Adversary random_adversary();
Adversary oracle_cheat_adversary();

// Maximum a posteriori guess from exhaustive integer likelihoods over all
// IMSIs, watchwords and seeds; ties broken by a fair coin.
class BayesAdversary {
 public:
  BayesAdversary(const VandermondeMatrix& a, const GameShape& shape);
  bool operator()(const GameInstance& g, Rng& rng) const;
  // Likelihood numerators over a common denominator; equal means a tie.
  std::pair<Wide, Wide> likelihoods(const SymbolVector& key_a,
                                                              const SymbolVector& key_b) const;

 private:
  std::uint64_t q_;
  std::size_t n_, k_, m_;
  std::vector<std::uint32_t> key_a_of_;              // by (imsi, watchword) index
  std::vector<std::vector<std::uint64_t>> nb_;       // [keyA][keyB] seed counts
  std::vector<std::vector<std::uint64_t>> per_imsi_; // [imsi][keyB] sum over watchwords of nb
  std::vector<std::uint64_t> total_;                 // [keyB] sum over imsis of per_imsi_
};

struct DistinguisherResult {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::uint64_t same_trials = 0;
  std::uint64_t diff_trials = 0;
  double p_yes_given_same = 0;  // P_Y
  double p_no_given_diff = 0;   // P_N
  double success_rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0; }
  double advantage() const { return std::abs(success_rate() - 0.5); }
};

DistinguisherResult play_distinguisher(const Adversary& adversary, std::uint64_t trials, Rng& rng,
                                       const VandermondeMatrix& a, const GameShape& shape);

// ---------------------------------------------------------------------------
// Linking reduction: a distinguisher turned into an ID <-> location linker
// over the two stores' record formats.

struct LinkInstance {
  protocol::RegistryRecord registry;  // (ID, KeyA of customer i)
  protocol::OdbRecord odb;            // (KeyB of customer j, location)
  bool linked = false;                // ground truth: i == j
};

using Linker = std::function<bool(const LinkInstance&, Rng&)>;

// Decodes the key material from both records and asks the adversary.
Linker make_linker(Adversary adversary, const gf::Field& field);

struct LinkerResult {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double success_rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0; }
  double advantage() const { return std::abs(success_rate() - 0.5); }
};

LinkerResult play_linker(const Linker& linker, std::uint64_t trials, Rng& rng, const VandermondeMatrix& a,
                         const GameShape& shape);

// ---------------------------------------------------------------------------
// Reduced-system substitution

struct ReducedCheck {
  std::uint64_t trials = 0;
  std::uint64_t violations = 0;
  bool passed() const { return violations == 0; }
};

// For random b, reduces the observed segment and checks
// v_i = b_{p+i} + sum over j outside the segment of M_{i,j} b_j.
ReducedCheck verify_reduced_system(const VandermondeMatrix& a, std::size_t p, std::size_t k, std::uint64_t trials,
                                   Rng& rng);
// Same, with a caller-supplied (possibly corrupted) system.
ReducedCheck verify_reduced_system(const VandermondeMatrix& a, const ReducedSystem& rs, std::uint64_t trials,
                                   Rng& rng);

// ---------------------------------------------------------------------------

struct OracleReportConfig {
  unsigned u = 2;
  std::size_t n = 4, k = 2, m = 2;
  std::size_t subsets = 5;
  std::uint64_t trials = 10000;
};

// MI per (p, subset), chain MI, balancedness and distinguisher tallies;
// "passed" is true iff every measured value matches its closed form and
// the table is balanced whenever m <= n - k.
nlohmann::ordered_json oracle_report(const OracleReportConfig& cfg, Rng& rng);

}  // namespace ncp::oracle

#include "doctest.h"

#include <cmath>
#include <map>

#include "ncp/oracle.hpp"

#include "field_oracle.hpp"

using namespace ncp;
using namespace ncp::oracle;
using gf::Field;
using gf::Symbol;
using linalg::CoefficientDomain;

namespace {

// Naive I(segment; subset) with map-based counting, schoolbook arithmetic
// and floating-point entropies. Independent of the library's packing.
double naive_mi(const std::vector<std::uint32_t>& coeffs, std::uint32_t poly, unsigned u, std::size_t p,
                std::size_t k, const std::vector<std::size_t>& subset) {
  const std::size_t n = coeffs.size();
  const auto a = ::oracle::vandermonde(coeffs, poly);
  const std::uint32_t q = 1u << u;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= q;

  std::map<std::vector<std::uint32_t>, double> pc, ps;
  std::map<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>, double> pj;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::vector<std::uint32_t> b(n);
    std::uint64_t t = idx;
    for (std::size_t j = 0; j < n; ++j) {
      b[j] = static_cast<std::uint32_t>(t % q);
      t /= q;
    }
    const auto c = ::oracle::mat_vec(a, b, poly);
    std::vector<std::uint32_t> seg(c.begin() + static_cast<std::ptrdiff_t>(p),
                                   c.begin() + static_cast<std::ptrdiff_t>(p + k));
    std::vector<std::uint32_t> sec;
    for (std::size_t s : subset) sec.push_back(b[s - 1]);
    pc[seg] += 1.0 / static_cast<double>(total);
    ps[sec] += 1.0 / static_cast<double>(total);
    pj[{seg, sec}] += 1.0 / static_cast<double>(total);
  }
  double mi = 0;
  for (const auto& [key, pxy] : pj) mi += pxy * std::log2(pxy / (pc[key.first] * ps[key.second]));
  return mi;
}

std::vector<std::uint32_t> coeffs_of(const linalg::VandermondeMatrix& a) {
  return {a.coeffs().begin(), a.coeffs().end()};
}

}  // namespace

TEST_CASE("closed form") {
  CHECK(closed_form_mi(4, 4, 2, 2) == 0.0);
  CHECK(closed_form_mi(4, 4, 2, 3) == 2.0);
  CHECK(closed_form_mi(4, 4, 2, 4) == 4.0);
  CHECK(closed_form_mi(256, 14, 7, 7) == 0.0);
  CHECK(closed_form_mi(8, 5, 5, 1) == doctest::Approx(3.0));
}

TEST_CASE("smallest case agrees with enumeration") {
  const Field f(1);
  const auto a = linalg::default_vandermonde(f, 1);
  const std::vector<std::size_t> s = {1};
  const auto r = brute_mutual_info(a, 0, 1, s);
  CHECK(r.inputs == 2);
  CHECK(r.bits == doctest::Approx(closed_form_mi(2, 1, 1, 1)));
  CHECK(r.bits == doctest::Approx(1.0));
}

TEST_CASE("q=4, n=4, k=2 with zero as an evaluation point") {
  const Field f(2);
  const auto a = oracle_matrix(f, 4);
  REQUIRE(a.coeffs()[0] == 0);
  const std::vector<std::size_t> first2 = {1, 2};
  const std::vector<std::size_t> first3 = {1, 2, 3};
  for (std::size_t p = 0; p <= 2; ++p) {
    CHECK(closed_form_applies(a, p, 2, first2));
    CHECK(brute_mutual_info(a, p, 2, first2).bits == 0.0);
    CHECK(brute_mutual_info(a, p, 2, first3).bits == doctest::Approx(2.0).epsilon(1e-12));
  }
  // With zero outside the subset and p >= 1 its column vanishes from the
  // segment; the hypothesis check flags it and the value departs.
  const std::vector<std::size_t> late = {3, 4};
  CHECK_FALSE(closed_form_applies(a, 1, 2, late));
  CHECK(brute_mutual_info(a, 1, 2, late).bits > 0.0);
  CHECK(closed_form_applies(a, 0, 2, late));
  CHECK(brute_mutual_info(a, 0, 2, late).bits == 0.0);
}

TEST_CASE("brute_mutual_info matches an independent naive computation") {
  Rng rng(5);
  for (unsigned u : {2u, 3u}) {
    const Field f(u);
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto a = linalg::default_vandermonde(f, n);
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t m = 1; m <= n; ++m)
          for (const auto& s : pick_subsets(n, m, 2, rng)) {
            const std::size_t p = rng.below(n - k + 1);
            const double mine = brute_mutual_info(a, p, k, s).bits;
            REQUIRE(mine == doctest::Approx(naive_mi(coeffs_of(a), f.poly(), u, p, k, s)).epsilon(1e-9));
          }
    }
  }
}

TEST_CASE("sweep over small fields matches the closed form") {
  Rng rng(77);
  for (unsigned u : {1u, 2u, 3u}) {
    const auto rows = sweep_closed_form(Field(u), 3, 5, rng);
    CHECK_FALSE(rows.empty());
    for (const auto& row : rows) {
      REQUIRE(row.applies);
      REQUIRE(row.passed());
      CHECK(row.measured.bits >= -1e-12);
      CHECK(row.measured.bits <= static_cast<double>(row.measured.m) * u + 1e-9);
    }
  }
}

TEST_CASE("pick_subsets") {
  Rng rng(1);
  auto s = pick_subsets(5, 2, 5, rng);
  REQUIRE(s.size() == 5);
  CHECK(s[0] == std::vector<std::size_t>{1, 2});
  std::set<std::vector<std::size_t>> distinct(s.begin(), s.end());
  CHECK(distinct.size() == 5);
  for (const auto& x : s) CHECK(std::is_sorted(x.begin(), x.end()));
  CHECK(pick_subsets(3, 2, 5, rng).size() == 3);
  CHECK(pick_subsets(4, 4, 5, rng).size() == 1);
}

TEST_CASE("enumeration guard and argument checks") {
  const Field f(8);
  const auto a = linalg::default_vandermonde(f, 4);
  const std::vector<std::size_t> s = {1};
  CHECK_THROWS_AS(brute_mutual_info(a, 0, 2, s), EnumerationError);
  const auto small = linalg::default_vandermonde(Field(2), 3);
  const std::vector<std::size_t> dup = {1, 1};
  CHECK_THROWS_AS(brute_mutual_info(small, 0, 1, dup), std::invalid_argument);
  const std::vector<std::size_t> out_of_range = {4};
  CHECK_THROWS_AS(brute_mutual_info(small, 0, 1, out_of_range), std::invalid_argument);
  CHECK_THROWS_AS(brute_mutual_info(small, 3, 1, s), std::invalid_argument);
}

TEST_CASE("chain mutual information through both tiers") {
  const auto a4 = oracle_matrix(Field(2), 4);
  CHECK(brute_chain_mutual_info(a4, {4, 2, 2, 0}, 0).bits == 0.0);
  CHECK(brute_chain_mutual_info(a4, {4, 2, 2, 1}, 2).bits == 0.0);
  const auto a8 = linalg::default_vandermonde(Field(3), 4);
  CHECK(brute_chain_mutual_info(a8, {4, 2, 2, 1}, 1).bits == 0.0);
  // Watchword and seed widths summing below k leave IMSI information.
  const auto leaky = linalg::default_vandermonde(Field(3), 4);
  const auto r = brute_chain_mutual_info(leaky, {4, 3, 3, 0}, 0);
  CHECK(r.bits == doctest::Approx(3.0));
  CHECK_THROWS(brute_chain_mutual_info(a4, {4, 4, 2, 0}, 0));
}

TEST_CASE("watchword balancedness at q=4, n=4, k=2, m=2") {
  const Field f(2);
  const auto a = oracle_matrix(f, 4);
  for (std::size_t p = 0; p <= 2; ++p) {
    const Shape shape{4, 2, 2, p};
    const auto table = balance_table(a, shape);
    CHECK(table.balanced());
    CHECK(table.mixed_rows() == 0);
    REQUIRE(table.counts.size() == 16);
    for (std::uint64_t seg = 0; seg < 16; ++seg) {
      const SymbolVector observed(f, {static_cast<Symbol>(seg >> 2), static_cast<Symbol>(seg & 3)});
      std::uint64_t first = 0;
      for (std::uint64_t id = 0; id < 16; ++id) {
        const SymbolVector imsi(f, {static_cast<Symbol>(id >> 2), static_cast<Symbol>(id & 3)});
        const auto c = consistency_count(observed, imsi, a, shape);
        CHECK(c == table.counts[seg][id]);
        if (id == 0) first = c;
        REQUIRE(c == first);
      }
      CHECK(first == 1);  // q^(n-m) watchwords spread over q^k segments
    }
  }
}

TEST_CASE("balancedness holds exhaustively for q <= 4, n <= 4 when m <= n - k") {
  for (unsigned u : {1u, 2u}) {
    const Field f(u);
    for (std::size_t n = 1; n <= 4 && n <= f.q(); ++n) {
      const auto a = oracle_matrix(f, n);
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t m = 1; m + k <= n; ++m)
          for (std::size_t p = 0; p + k <= n; ++p) {
            const auto t = balance_table(a, {n, k, m, p});
            CHECK(t.balanced());
            CHECK(t.mixed_rows() == 0);
          }
    }
  }
}

TEST_CASE("k = n leaves no free symbols") {
  const Field f(2);
  const auto a = linalg::default_vandermonde(f, 3);
  const auto t = balance_table(a, {3, 3, 1, 0});
  std::uint64_t hits = 0;
  for (const auto& row : t.counts)
    for (auto c : row) {
      CHECK(c <= 1);
      hits += c;
    }
  // Each segment comes from exactly one (IMSI, watchword) pair.
  CHECK(hits == 64);
  for (const auto& row : t.counts) {
    std::uint64_t s = 0;
    for (auto c : row) s += c;
    CHECK(s == 1);
  }
}

TEST_CASE("consistency_count agrees with the keygen composition") {
  const Field f(2);
  const auto params = keygen::KeygenParams::make(f, 4, 2, 2, 1);
  const auto a = linalg::default_vandermonde(f, 4, CoefficientDomain::kAnyDistinct);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    SymbolVector imsi(f, 2), w(f, 2);
    for (auto& s : imsi.symbols) s = static_cast<Symbol>(rng.below(4));
    for (auto& s : w.symbols) s = static_cast<Symbol>(rng.below(4));
    const auto key = keygen::derive_keyA(
        keygen::mix_tier1(keygen::Identity::from_symbols(imsi), keygen::Watchword{w}, params), a, params);
    const SymbolVector observed = key.symbols(f);
    std::uint64_t expected = 0;
    for (Symbol w0 = 0; w0 < 4; ++w0)
      for (Symbol w1 = 0; w1 < 4; ++w1) {
        const auto k2 = keygen::derive_keyA(
            keygen::mix_tier1(keygen::Identity::from_symbols(imsi), keygen::Watchword{SymbolVector(f, {w0, w1})},
                              params),
            a, params);
        if (k2 == key) ++expected;
      }
    CHECK(consistency_count(observed, imsi, a, {4, 2, 2, 1}) == expected);
    CHECK(expected >= 1);
  }
}

TEST_CASE("Bayes likelihoods tie everywhere at q=4, n=4, k=2, m=2") {
  const Field f(2);
  const auto a = oracle_matrix(f, 4);
  for (std::size_t p2 = 0; p2 <= 2; ++p2) {
    const GameShape game{{4, 2, 2, 1}, p2};
    const BayesAdversary bayes(a, game);
    for (std::uint64_t ka = 0; ka < 16; ++ka)
      for (std::uint64_t kb = 0; kb < 16; ++kb) {
        const SymbolVector va(f, {static_cast<Symbol>(ka >> 2), static_cast<Symbol>(ka & 3)});
        const SymbolVector vb(f, {static_cast<Symbol>(kb >> 2), static_cast<Symbol>(kb & 3)});
        const auto [same, diff] = bayes.likelihoods(va, vb);
        REQUIRE(same == diff);
        CHECK(same > 0);
      }
  }
}

TEST_CASE("distinguisher game") {
  const Field f(2);
  const auto a = oracle_matrix(f, 4);
  const GameShape game{{4, 2, 2, 0}, 0};
  Rng rng(2024);

  const auto random = play_distinguisher(random_adversary(), 10000, rng, a, game);
  CHECK(random.trials == 10000);
  CHECK(random.same_trials + random.diff_trials == 10000);
  CHECK(random.advantage() < 0.02);

  const BayesAdversary bayes(a, game);
  const auto b = play_distinguisher(std::cref(bayes), 10000, rng, a, game);
  CHECK(std::abs(b.success_rate() - 0.5) <= 0.015);

  const auto cheat = play_distinguisher(oracle_cheat_adversary(), 10000, rng, a, game);
  CHECK(cheat.success_rate() > 0.99);
  CHECK(cheat.p_yes_given_same == 1.0);
  CHECK(cheat.p_no_given_diff == 1.0);

  CHECK_THROWS(play_distinguisher(random_adversary(), 0, rng, a, game));
}

TEST_CASE("Bayes adversary wins when the seed is too short") {
  // n=3, k=2: one watchword symbol and one seed symbol, so both tiers leak.
  const Field f(2);
  const auto a = linalg::default_vandermonde(f, 3);
  const GameShape game{{3, 2, 2, 0}, 0};
  const BayesAdversary bayes(a, game);
  Rng rng(8);
  const auto r = play_distinguisher(std::cref(bayes), 10000, rng, a, game);
  CHECK(r.success_rate() > 0.6);
}

TEST_CASE("linker built from a distinguisher keeps its advantage") {
  const Field f(2);
  const auto a = oracle_matrix(f, 4);
  const GameShape game{{4, 2, 2, 0}, 0};
  Rng rng(99);
  const auto cheat = play_linker(make_linker(oracle_cheat_adversary(), f), 5000, rng, a, game);
  CHECK(cheat.success_rate() > 0.99);
  const auto guess = play_linker(make_linker(random_adversary(), f), 5000, rng, a, game);
  CHECK(guess.advantage() < 0.03);

  const auto leaky = linalg::default_vandermonde(f, 3);
  const GameShape leaky_game{{3, 2, 2, 0}, 0};
  const BayesAdversary bayes(leaky, leaky_game);
  const auto dist = play_distinguisher(std::cref(bayes), 10000, rng, leaky, leaky_game);
  const auto link = play_linker(make_linker(std::cref(bayes), f), 10000, rng, leaky, leaky_game);
  CHECK(link.advantage() >= dist.advantage() - 0.03);
}

TEST_CASE("reduced system substitution") {
  Rng rng(12);
  const Field f8(3);
  const auto a = linalg::default_vandermonde(f8, 4);
  for (std::size_t p = 0; p <= 2; ++p) {
    const auto r = verify_reduced_system(a, p, 2, 1000, rng);
    CHECK(r.trials == 1000);
    CHECK(r.passed());
  }
  CHECK(verify_reduced_system(a, 0, 4, 200, rng).passed());

  auto rs = linalg::reduce_segment(a, 1, 2);
  rs.reduced(0, 0) = Field::add(rs.reduced(0, 0), 1);
  const auto bad = verify_reduced_system(a, rs, 1000, rng);
  CHECK(bad.violations > 0);
  CHECK_FALSE(bad.passed());
}

TEST_CASE("oracle report") {
  Rng rng(4);
  OracleReportConfig cfg;
  cfg.trials = 2000;
  const auto j = oracle_report(cfg, rng);
  CHECK(j["passed"] == true);
  CHECK(j["measured_bits"] == 0.0);
  CHECK(j["closed_form_bits"] == 0.0);
  CHECK(j["balanced"] == true);
  CHECK(j["chain"]["keyb_bits"] == 0.0);
  CHECK(j["distinguisher"]["oracle_cheat"]["success_rate"].get<double>() > 0.99);

  cfg.m = 3;
  const auto leak = oracle_report(cfg, rng);
  CHECK(leak["passed"] == true);
  CHECK(leak["measured_bits"].get<double>() == doctest::Approx(2.0));
}

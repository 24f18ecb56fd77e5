#include "ncp/oracle.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace ncp::oracle {

using gf::Field;
using gf::Symbol;
using linalg::CoefficientDomain;
using linalg::Matrix;
using protocol::Location;

void Shape::validate(const VandermondeMatrix& a) const {
  if (n != a.n()) throw std::invalid_argument("shape n does not match the matrix");
  if (k < 1 || k > n) throw std::invalid_argument("k must be in [1, n]");
  if (m < 1 || m > n) throw std::invalid_argument("m must be in [1, n]");
  if (p > n - k) throw std::invalid_argument("p must be in [0, n - k]");
}

VandermondeMatrix oracle_matrix(const Field& field, std::size_t n) {
  return linalg::default_vandermonde(field, n, n < field.q() ? CoefficientDomain::kNonzero : CoefficientDomain::kAnyDistinct);
}

namespace {

std::uint64_t checked_power(std::uint64_t q, std::size_t e) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (r > kEnumerationLimit / q) throw EnumerationError("enumeration exceeds 2^20 inputs");
    r *= q;
  }
  return r;
}

// Symbols packed u bits each, first symbol in the most significant place;
// this is also the base-q index.
std::uint64_t pack(std::span<const Symbol> s, unsigned u) {
  std::uint64_t key = 0;
  for (Symbol x : s) key = (key << u) | x;
  return key;
}

// Packed segment c_{p+1..p+k} of A x for any packed n-vector x, using
// per-column lookup tables (the map is linear, so contributions XOR).
class SegmentEncoder {
 public:
  SegmentEncoder(const VandermondeMatrix& a, std::size_t p, std::size_t k)
      : u_(a.field().u()), q_(a.field().q()), n_(a.n()), table_(a.n() * a.field().q()) {
    const Field& f = a.field();
    std::vector<Symbol> col(k);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::uint64_t x = 0; x < q_; ++x) {
        for (std::size_t i = 0; i < k; ++i) col[i] = f.mul(a(p + i, j), static_cast<Symbol>(x));
        table_[j * q_ + x] = pack(col, u_);
      }
  }

  std::uint64_t operator()(std::uint64_t packed_input) const {
    std::uint64_t out = 0;
    const std::uint64_t mask = q_ - 1;
    for (std::size_t j = n_; j-- > 0;) {
      out ^= table_[j * q_ + (packed_input & mask)];
      packed_input >>= u_;
    }
    return out;
  }

 private:
  unsigned u_;
  std::uint64_t q_;
  std::size_t n_;
  std::vector<std::uint64_t> table_;
};

struct KeyCount {
  std::uint64_t key;
  std::uint64_t count;
};

std::vector<KeyCount> tally(std::vector<std::uint64_t> keys) {
  std::sort(keys.begin(), keys.end());
  std::vector<KeyCount> out;
  for (std::uint64_t k : keys) {
    if (!out.empty() && out.back().key == k)
      ++out.back().count;
    else
      out.push_back({k, 1});
  }
  return out;
}

std::uint64_t count_of(const std::vector<KeyCount>& t, std::uint64_t key) {
  const auto it = std::lower_bound(t.begin(), t.end(), key, [](const KeyCount& a, std::uint64_t k) { return a.key < k; });
  return it->count;
}

// I(X; Y) in bits for equally likely samples (x_i, y_i). Each joint class
// contributes N_xy/T * log2(N_xy T / (N_x N_y)); classes are grouped by the
// reduced integer ratio so logarithms are taken once per distinct ratio.
double exact_mi(const std::vector<std::uint64_t>& xs, const std::vector<std::uint64_t>& ys, unsigned y_bits,
                std::uint64_t* joint_classes) {
  const std::uint64_t total = xs.size();
  std::vector<std::uint64_t> joint(total);
  for (std::size_t i = 0; i < total; ++i) joint[i] = (xs[i] << y_bits) | ys[i];
  const auto nx = tally(xs);
  const auto ny = tally(ys);
  const auto nxy = tally(std::move(joint));
  if (joint_classes) *joint_classes = nxy.size();

  const std::uint64_t y_mask = (std::uint64_t{1} << y_bits) - 1;
  std::map<std::pair<Wide, Wide>, std::uint64_t> by_ratio;
  for (const auto& c : nxy) {
    Wide num = static_cast<Wide>(c.count) * total;
    Wide den = static_cast<Wide>(count_of(nx, c.key >> y_bits)) * count_of(ny, c.key & y_mask);
    Wide a = num, b = den;
    while (b != 0) {
      const Wide t = a % b;
      a = b;
      b = t;
    }
    by_ratio[{num / a, den / a}] += c.count;
  }
  long double bits = 0;
  for (const auto& [ratio, weight] : by_ratio) {
    if (ratio.first == ratio.second) continue;
    const long double lr = std::log2(static_cast<long double>(ratio.first)) - std::log2(static_cast<long double>(ratio.second));
    bits += static_cast<long double>(weight) / static_cast<long double>(total) * lr;
  }
  return static_cast<double>(bits);
}

void check_subset(std::size_t n, std::span<const std::size_t> subset) {
  if (subset.empty() || subset.size() > n) throw std::invalid_argument("subset size must be in [1, n]");
  std::set<std::size_t> seen;
  for (std::size_t s : subset) {
    if (s < 1 || s > n) throw std::invalid_argument("subset positions are 1-based and <= n");
    if (!seen.insert(s).second) throw std::invalid_argument("subset positions must be distinct");
  }
}

std::uint64_t pick(std::uint64_t packed, std::span<const std::size_t> subset, std::size_t n, unsigned u) {
  const std::uint64_t mask = (std::uint64_t{1} << u) - 1;
  std::uint64_t key = 0;
  for (std::size_t pos : subset) key = (key << u) | ((packed >> (u * (n - pos))) & mask);
  return key;
}

}  // namespace

MutualInfoResult brute_mutual_info(const VandermondeMatrix& a, std::size_t p, std::size_t k,
                                   std::span<const std::size_t> subset) {
  const std::size_t n = a.n();
  Shape{n, k, subset.size(), p}.validate(a);
  check_subset(n, subset);
  const unsigned u = a.field().u();
  const std::uint64_t total = checked_power(a.field().q(), n);

  const SegmentEncoder enc(a, p, k);
  std::vector<std::uint64_t> segs(total);
  std::vector<std::uint64_t> secrets(total);
  for (std::uint64_t b = 0; b < total; ++b) {
    segs[b] = enc(b);
    secrets[b] = pick(b, subset, n, u);
  }

  MutualInfoResult r;
  r.q = a.field().q();
  r.n = n;
  r.k = k;
  r.m = subset.size();
  r.p = p;
  r.subset.assign(subset.begin(), subset.end());
  r.inputs = total;
  r.bits = exact_mi(segs, secrets, static_cast<unsigned>(u * subset.size()), &r.joint_classes);
  return r;
}

double closed_form_mi(std::uint64_t q, std::size_t n, std::size_t k, std::size_t m) {
  if (m + k <= n) return 0.0;
  return static_cast<double>(m + k - n) * std::log2(static_cast<double>(q));
}

bool closed_form_applies(const VandermondeMatrix& a, std::size_t p, std::size_t k,
                         std::span<const std::size_t> subset) {
  const std::size_t n = a.n();
  check_subset(n, subset);
  const Matrix rows = a.entries().row_block(p, k);
  if (linalg::rank(rows) != k) return false;
  std::vector<std::size_t> outside;
  for (std::size_t j = 1; j <= n; ++j)
    if (std::find(subset.begin(), subset.end(), j) == subset.end()) outside.push_back(j - 1);
  if (outside.empty()) return true;
  Matrix rest(a.field(), k, outside.size());
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = 0; c < outside.size(); ++c) rest(i, c) = rows(i, outside[c]);
  return linalg::rank(rest) == std::min(k, outside.size());
}

MutualInfoResult brute_chain_mutual_info(const VandermondeMatrix& a, const Shape& shape, std::size_t p2) {
  shape.validate(a);
  const std::size_t n = shape.n, k = shape.k, m = shape.m;
  if (k >= n) throw std::invalid_argument("chain needs k < n for a nonempty seed");
  if (p2 > n - k) throw std::invalid_argument("p2 must be in [0, n - k]");
  const unsigned u = a.field().u();
  const std::uint64_t q = a.field().q();
  const std::uint64_t inputs = checked_power(q, n);
  const std::uint64_t seeds = checked_power(q, n - k);
  if (inputs > kEnumerationLimit / seeds) throw EnumerationError("enumeration exceeds 2^20 inputs");

  const SegmentEncoder tier1(a, shape.p, k);
  const SegmentEncoder tier2(a, p2, k);
  std::vector<std::uint64_t> keyb;
  std::vector<std::uint64_t> imsi;
  keyb.reserve(inputs * seeds);
  imsi.reserve(inputs * seeds);
  for (std::uint64_t b = 0; b < inputs; ++b) {
    const std::uint64_t key_a = tier1(b);
    const std::uint64_t id = b >> (u * (n - m));
    for (std::uint64_t s = 0; s < seeds; ++s) {
      keyb.push_back(tier2((key_a << (u * (n - k))) | s));
      imsi.push_back(id);
    }
  }

  MutualInfoResult r;
  r.q = q;
  r.n = n;
  r.k = k;
  r.m = m;
  r.p = shape.p;
  for (std::size_t i = 1; i <= m; ++i) r.subset.push_back(i);
  r.method = "exhaustive-chain";
  r.inputs = keyb.size();
  r.bits = exact_mi(keyb, imsi, static_cast<unsigned>(u * m), &r.joint_classes);
  return r;
}

std::vector<std::vector<std::size_t>> pick_subsets(std::size_t n, std::size_t m, std::size_t count, Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> first(m);
  std::iota(first.begin(), first.end(), 1);

  // All m-subsets in lexicographic order when there are few enough.
  std::vector<std::vector<std::size_t>> all;
  std::vector<std::size_t> cur = first;
  while (true) {
    all.push_back(cur);
    if (all.size() > count) break;
    std::size_t i = m;
    while (i > 0 && cur[i - 1] == n - m + i) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < m; ++j) cur[j] = cur[j - 1] + 1;
  }
  if (all.size() <= count) return all;

  std::set<std::vector<std::size_t>> seen = {first};
  out.push_back(first);
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), 1);
  while (out.size() < count) {
    for (std::size_t i = 0; i < m; ++i) std::swap(positions[i], positions[i + rng.below(n - i)]);
    std::vector<std::size_t> s(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(s.begin(), s.end());
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

bool SweepRow::passed() const { return !applies || std::abs(measured.bits - closed_form) <= 1e-9; }

std::vector<SweepRow> sweep_closed_form(const Field& field, std::size_t max_n, std::size_t subsets_per_m, Rng& rng) {
  std::vector<SweepRow> rows;
  for (std::size_t n = 1; n <= max_n && n < field.q(); ++n) {
    const VandermondeMatrix a = linalg::default_vandermonde(field, n);
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t m = 1; m <= n; ++m) {
        const auto subsets = pick_subsets(n, m, subsets_per_m, rng);
        for (std::size_t p = 0; p + k <= n; ++p)
          for (const auto& s : subsets) {
            SweepRow row;
            row.measured = brute_mutual_info(a, p, k, s);
            row.closed_form = closed_form_mi(field.q(), n, k, m);
            row.applies = closed_form_applies(a, p, k, s);
            rows.push_back(std::move(row));
          }
      }
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::uint64_t consistency_count(const SymbolVector& observed, const SymbolVector& imsi_candidate,
                                const VandermondeMatrix& a, const Shape& shape) {
  shape.validate(a);
  if (observed.size() != shape.k) throw std::invalid_argument("observed segment must have k symbols");
  if (imsi_candidate.size() != shape.m) throw std::invalid_argument("IMSI candidate must have m symbols");
  const unsigned u = a.field().u();
  const std::uint64_t words = checked_power(a.field().q(), shape.n - shape.m);
  const SegmentEncoder enc(a, shape.p, shape.k);
  const std::uint64_t target = pack(observed.symbols, u);
  const std::uint64_t prefix = pack(imsi_candidate.symbols, u) << (u * (shape.n - shape.m));
  std::uint64_t count = 0;
  for (std::uint64_t w = 0; w < words; ++w)
    if (enc(prefix | w) == target) ++count;
  return count;
}

bool BalanceTable::balanced() const {
  return std::all_of(counts.begin(), counts.end(), [](const auto& row) {
    return std::adjacent_find(row.begin(), row.end(), std::not_equal_to<>()) == row.end();
  });
}

std::size_t BalanceTable::mixed_rows() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](const auto& row) {
    const bool any_zero = std::find(row.begin(), row.end(), 0u) != row.end();
    const bool any_hit = std::any_of(row.begin(), row.end(), [](std::uint64_t c) { return c != 0; });
    return any_zero && any_hit;
  }));
}

BalanceTable balance_table(const VandermondeMatrix& a, const Shape& shape) {
  shape.validate(a);
  const unsigned u = a.field().u();
  const std::uint64_t q = a.field().q();
  const std::uint64_t total = checked_power(q, shape.n);
  BalanceTable t;
  t.q = q;
  t.k = shape.k;
  t.m = shape.m;
  t.counts.assign(checked_power(q, shape.k), std::vector<std::uint64_t>(checked_power(q, shape.m), 0));
  const SegmentEncoder enc(a, shape.p, shape.k);
  for (std::uint64_t b = 0; b < total; ++b) ++t.counts[enc(b)][b >> (u * (shape.n - shape.m))];
  return t;
}

// ---------------------------------------------------------------------------

namespace {

void check_game(const VandermondeMatrix& a, const GameShape& shape) {
  shape.tier1.validate(a);
  if (shape.tier1.k >= shape.tier1.n) throw std::invalid_argument("game needs k < n for a nonempty seed");
  if (shape.p2 > shape.tier1.n - shape.tier1.k) throw std::invalid_argument("p2 must be in [0, n - k]");
}

SymbolVector random_symbols(const Field& f, std::size_t len, Rng& rng) {
  SymbolVector v(f, len);
  for (auto& s : v.symbols) s = static_cast<Symbol>(rng.below(f.q()));
  return v;
}

SymbolVector concat(const SymbolVector& x, const SymbolVector& y) {
  SymbolVector r = x;
  r.symbols.insert(r.symbols.end(), y.symbols.begin(), y.symbols.end());
  return r;
}

}  // namespace

GameInstance generate_instance(const VandermondeMatrix& a, const GameShape& shape, Rng& rng) {
  check_game(a, shape);
  const Field& f = a.field();
  const auto& s = shape.tier1;
  const bool same = rng.coin();

  const SymbolVector imsi_i = random_symbols(f, s.m, rng);
  const SymbolVector w_i = random_symbols(f, s.n - s.m, rng);
  const SymbolVector key_a_i = linalg::encode_segment(a, concat(imsi_i, w_i), s.p, s.k);

  SymbolVector key_a_j = key_a_i;
  if (!same) {
    SymbolVector imsi_j = random_symbols(f, s.m, rng);
    while (imsi_j == imsi_i) imsi_j = random_symbols(f, s.m, rng);
    key_a_j = linalg::encode_segment(a, concat(imsi_j, random_symbols(f, s.n - s.m, rng)), s.p, s.k);
  }
  const SymbolVector seed = random_symbols(f, s.n - s.k, rng);
  SymbolVector key_b_j = linalg::encode_segment(a, concat(key_a_j, seed), shape.p2, s.k);
  return GameInstance{key_a_i, std::move(key_b_j), same};
}

Adversary random_adversary() {
  return [](const GameInstance&, Rng& rng) { return rng.coin(); };
}

Adversary oracle_cheat_adversary() {
  return [](const GameInstance& g, Rng&) { return g.same; };
}

BayesAdversary::BayesAdversary(const VandermondeMatrix& a, const GameShape& shape)
    : q_(a.field().q()), n_(shape.tier1.n), k_(shape.tier1.k), m_(shape.tier1.m) {
  check_game(a, shape);
  const unsigned u = a.field().u();
  const std::uint64_t inputs = checked_power(q_, n_);
  const std::uint64_t seeds = checked_power(q_, n_ - k_);
  const std::uint64_t segs = checked_power(q_, k_);
  const std::uint64_t imsis = checked_power(q_, m_);

  const SegmentEncoder tier1(a, shape.tier1.p, k_);
  const SegmentEncoder tier2(a, shape.p2, k_);
  key_a_of_.resize(inputs);
  for (std::uint64_t b = 0; b < inputs; ++b) key_a_of_[b] = static_cast<std::uint32_t>(tier1(b));

  nb_.assign(segs, std::vector<std::uint64_t>(segs, 0));
  for (std::uint64_t ka = 0; ka < segs; ++ka)
    for (std::uint64_t s = 0; s < seeds; ++s) ++nb_[ka][tier2((ka << (u * (n_ - k_))) | s)];

  per_imsi_.assign(imsis, std::vector<std::uint64_t>(segs, 0));
  total_.assign(segs, 0);
  for (std::uint64_t b = 0; b < inputs; ++b) {
    const std::uint64_t id = b >> (u * (n_ - m_));
    for (std::uint64_t kb = 0; kb < segs; ++kb) {
      per_imsi_[id][kb] += nb_[key_a_of_[b]][kb];
      total_[kb] += nb_[key_a_of_[b]][kb];
    }
  }
}

std::pair<Wide, Wide> BayesAdversary::likelihoods(const SymbolVector& key_a,
                                                                             const SymbolVector& key_b) const {
  const unsigned u = key_a.field.u();
  const std::uint64_t ka = pack(key_a.symbols, u);
  const std::uint64_t kb = pack(key_b.symbols, u);

  // P(a, b | same)  = sum over (imsi, w) -> a of nb[a][b]     / (q^n q^(n-k))
  // P(a, b | diff)  = sum over (imsi, w) -> a, imsi' != imsi, w' of
  //                   nb[keyA(imsi', w')][b] / (q^m (q^m - 1) q^(2(n-m)) q^(n-k))
  Wide same = 0;
  Wide diff = 0;
  for (std::uint64_t b = 0; b < key_a_of_.size(); ++b) {
    if (key_a_of_[b] != ka) continue;
    same += nb_[ka][kb];
    diff += total_[kb] - per_imsi_[b >> (u * (n_ - m_))][kb];
  }
  // Bring both to the common denominator q^m (q^m - 1) q^(2(n-m)) q^(n-k).
  Wide qm = 1, qnm = 1;
  for (std::size_t i = 0; i < m_; ++i) qm *= q_;
  for (std::size_t i = 0; i < n_ - m_; ++i) qnm *= q_;
  // q^n = q^m q^(n-m), so the same-branch factor is (q^m - 1) q^(n-m).
  same *= (qm - 1) * qnm;
  return {same, diff};
}

bool BayesAdversary::operator()(const GameInstance& g, Rng& rng) const {
  const auto [same, diff] = likelihoods(g.key_a_i, g.key_b_j);
  if (same != diff) return same > diff;
  return rng.coin();
}

DistinguisherResult play_distinguisher(const Adversary& adversary, std::uint64_t trials, Rng& rng,
                                       const VandermondeMatrix& a, const GameShape& shape) {
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  Rng game_rng = rng.split();
  Rng adv_rng = rng.split();
  DistinguisherResult r;
  std::uint64_t yes_same = 0, no_diff = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const GameInstance g = generate_instance(a, shape, game_rng);
    const bool guess = adversary(g, adv_rng);
    ++r.trials;
    if (g.same) {
      ++r.same_trials;
      if (guess) ++yes_same;
    } else {
      ++r.diff_trials;
      if (!guess) ++no_diff;
    }
    if (guess == g.same) ++r.successes;
  }
  r.p_yes_given_same = r.same_trials ? static_cast<double>(yes_same) / static_cast<double>(r.same_trials) : 0;
  r.p_no_given_diff = r.diff_trials ? static_cast<double>(no_diff) / static_cast<double>(r.diff_trials) : 0;
  return r;
}

// ---------------------------------------------------------------------------

Linker make_linker(Adversary adversary, const Field& field) {
  return [adversary = std::move(adversary), field](const LinkInstance& inst, Rng& rng) {
    const auto decode = [&](const std::string& hex, keygen::KeyRole role) {
      keygen::Key key;
      key.role = role;
      key.material = from_hex(hex);
      return key.symbols(field);
    };
    // Ground truth is forwarded only so calibration adversaries work.
    const GameInstance g{decode(inst.registry.keya, keygen::KeyRole::kKeyA),
                         decode(inst.odb.keyb, keygen::KeyRole::kKeyB), inst.linked};
    return adversary(g, rng);
  };
}

LinkerResult play_linker(const Linker& linker, std::uint64_t trials, Rng& rng, const VandermondeMatrix& a,
                         const GameShape& shape) {
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  Rng game_rng = rng.split();
  Rng link_rng = rng.split();
  LinkerResult r;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const GameInstance g = generate_instance(a, shape, game_rng);
    LinkInstance inst;
    inst.registry = {"customer-" + std::to_string(t), "", keygen::Key::from_symbols(g.key_a_i, keygen::KeyRole::kKeyA).hex()};
    const Location loc{game_rng.between_signed(0, 99'999), game_rng.between_signed(0, 99'999)};
    const Location cell = protocol::coarsen(loc, protocol::PrivacyLevel::kStreet);
    inst.odb = {keygen::Key::from_symbols(g.key_b_j, keygen::KeyRole::kKeyB).hex(), cell.x, cell.y,
                protocol::PrivacyLevel::kStreet, t, "group"};
    inst.linked = g.same;
    ++r.trials;
    if (linker(inst, link_rng) == inst.linked) ++r.successes;
  }
  return r;
}

// ---------------------------------------------------------------------------

ReducedCheck verify_reduced_system(const VandermondeMatrix& a, std::size_t p, std::size_t k, std::uint64_t trials,
                                   Rng& rng) {
  return verify_reduced_system(a, linalg::reduce_segment(a, p, k), trials, rng);
}

ReducedCheck verify_reduced_system(const VandermondeMatrix& a, const ReducedSystem& rs, std::uint64_t trials,
                                   Rng& rng) {
  const Field& f = a.field();
  const std::size_t n = a.n(), p = rs.offset, k = rs.length;
  ReducedCheck r;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const SymbolVector b = random_symbols(f, n, rng);
    const SymbolVector v = rs.reduce(linalg::encode_segment(a, b, p, k));
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i) {
      Symbol rhs = b[p + i];
      for (std::size_t j = 0; j < n; ++j)
        if (j < p || j >= p + k) rhs = Field::add(rhs, f.mul(rs.reduced(i, j), b[j]));
      ok = v[i] == rhs;
    }
    ++r.trials;
    if (!ok) ++r.violations;
  }
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json oracle_report(const OracleReportConfig& cfg, Rng& rng) {
  using nlohmann::ordered_json;
  const Field field(cfg.u);
  const VandermondeMatrix a = oracle_matrix(field, cfg.n);
  const Shape base{cfg.n, cfg.k, cfg.m, 0};
  base.validate(a);

  bool passed = true;
  ordered_json j;
  j["q"] = field.q();
  j["n"] = cfg.n;
  j["k"] = cfg.k;
  j["m"] = cfg.m;
  j["coefficients"] = a.coeffs();
  const double closed = closed_form_mi(field.q(), cfg.n, cfg.k, cfg.m);
  j["closed_form_bits"] = closed;

  // Subsets the closed form covers for every offset.
  ordered_json subsets = ordered_json::array();
  double worst = 0;
  for (const auto& s : pick_subsets(cfg.n, cfg.m, cfg.subsets, rng)) {
    for (std::size_t p = 0; p + cfg.k <= cfg.n; ++p) {
      ordered_json row;
      row["p"] = p;
      row["subset"] = s;
      const bool applies = closed_form_applies(a, p, cfg.k, s);
      row["applies"] = applies;
      if (!applies) {
        subsets.push_back(std::move(row));
        continue;
      }
      const auto mi = brute_mutual_info(a, p, cfg.k, s);
      row["bits"] = mi.bits;
      const bool ok = std::abs(mi.bits - closed) <= 1e-9;
      row["pass"] = ok;
      passed = passed && ok;
      worst = std::max(worst, std::abs(mi.bits - closed));
      subsets.push_back(std::move(row));
    }
  }
  const auto first_m = brute_mutual_info(a, 0, cfg.k, pick_subsets(cfg.n, cfg.m, 1, rng).front());
  j["measured_bits"] = first_m.bits;
  j["max_deviation_bits"] = worst;
  j["subsets"] = std::move(subsets);

  if (cfg.k < cfg.n) {
    ordered_json chain;
    const auto c = brute_chain_mutual_info(a, base, 0);
    chain["keyb_bits"] = c.bits;
    // KeyA occupies the first k positions of the second-tier input.
    chain["keyb_closed_form_bits"] = closed_form_mi(field.q(), cfg.n, cfg.k, cfg.k);
    j["chain"] = std::move(chain);

    const auto table = balance_table(a, base);
    j["balanced"] = table.balanced();
    if (cfg.m + cfg.k <= cfg.n) passed = passed && table.balanced();

    const GameShape game{base, 0};
    ordered_json dist;
    const BayesAdversary bayes(a, game);
    for (const auto& [name, adv] : std::vector<std::pair<std::string, Adversary>>{
             {"random", random_adversary()}, {"bayes", std::cref(bayes)}, {"oracle_cheat", oracle_cheat_adversary()}}) {
      const auto r = play_distinguisher(adv, cfg.trials, rng, a, game);
      ordered_json d;
      d["trials"] = r.trials;
      d["successes"] = r.successes;
      d["success_rate"] = r.success_rate();
      d["p_yes_given_same"] = r.p_yes_given_same;
      d["p_no_given_diff"] = r.p_no_given_diff;
      d["advantage"] = r.advantage();
      dist[name] = std::move(d);
    }
    j["distinguisher"] = std::move(dist);
  }
  j["passed"] = passed;
  return j;
}

}  // namespace ncp::oracle

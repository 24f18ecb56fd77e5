#include "ncp/keygen.hpp"

#include <algorithm>

namespace ncp::keygen {

namespace {

// Decimal digit string -> big-endian binary digits (no leading zeros; "0" -> {}).
std::vector<bool> decimal_to_binary(std::string_view digits) {
  std::vector<std::uint8_t> dec;
  for (char c : digits) dec.push_back(static_cast<std::uint8_t>(c - '0'));
  std::vector<bool> lsb_first;
  auto is_zero = [&] { return std::all_of(dec.begin(), dec.end(), [](auto d) { return d == 0; }); };
  while (!is_zero()) {
    unsigned rem = 0;
    for (auto& d : dec) {
      const unsigned cur = rem * 10 + d;
      d = static_cast<std::uint8_t>(cur / 2);
      rem = cur % 2;
    }
    lsb_first.push_back(rem != 0);
  }
  return {lsb_first.rbegin(), lsb_first.rend()};
}

void require_nc(const Key& key) {
  if (key.scheme != Scheme::kNetworkCoding) throw KeygenError("expected a network-coding key");
}

Key segment_key(const SymbolVector& b, const VandermondeMatrix& a, const KeygenParams& params,
                std::size_t offset, KeyRole role) {
  if (!(a.field() == params.field)) throw gf::FieldMismatch("matrix field differs from parameters");
  if (a.n() != params.n) throw KeygenError("matrix dimension differs from n");
  if (b.size() != params.n) throw KeygenError("mixed vector must have n symbols");
  if (offset > params.n - params.k) throw KeygenError("segment offset must be in [0, n - k]");
  return Key::from_symbols(linalg::encode_segment(a, b, offset, params.k), role);
}

}  // namespace

std::size_t imsi_bit_length(std::size_t digits) {
  if (digits == 0) throw KeygenError("identity needs at least one digit");
  // 10^d is never a power of two, so bit_length(10^d) is the smallest L
  // with 2^L >= 10^d.
  return decimal_to_binary("1" + std::string(digits, '0')).size();
}

std::vector<Symbol> pack_bits(const Field& field, const std::vector<bool>& bits) {
  const unsigned u = field.u();
  std::vector<Symbol> out((bits.size() + u - 1) / u, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / u] |= static_cast<Symbol>(1u << (u - 1 - i % u));
  }
  return out;
}

Identity Identity::from_digits(const Field& field, std::string_view digits) {
  if (digits.empty()) throw KeygenError("identity digit string is empty");
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw KeygenError("identity must be a decimal digit string");
  }
  const std::size_t len = imsi_bit_length(digits.size());
  const auto value = decimal_to_binary(digits);
  std::vector<bool> bits(len - value.size(), false);
  bits.insert(bits.end(), value.begin(), value.end());
  return Identity(std::string(digits), len, SymbolVector(field, pack_bits(field, bits)));
}

std::string Identity::to_digits(const SymbolVector& symbols, std::size_t digit_count) {
  const std::size_t len = imsi_bit_length(digit_count);
  const unsigned u = symbols.field.u();
  if (symbols.size() * u < len) throw KeygenError("too few symbols for the digit count");
  // Doubling-and-add into a little-endian decimal accumulator.
  std::vector<std::uint8_t> dec(digit_count + 1, 0);
  for (std::size_t i = 0; i < len; ++i) {
    const bool bit = (symbols[i / u] >> (u - 1 - i % u)) & 1u;
    unsigned carry = bit ? 1 : 0;
    for (auto& d : dec) {
      const unsigned cur = d * 2u + carry;
      d = static_cast<std::uint8_t>(cur % 10);
      carry = cur / 10;
    }
  }
  if (dec.back() != 0) throw KeygenError("symbols encode more digits than requested");
  std::string s;
  for (std::size_t i = digit_count; i-- > 0;) s.push_back(static_cast<char>('0' + dec[i]));
  return s;
}

Watchword Watchword::from_text(const Field& field, std::string_view text, std::size_t length,
                               std::size_t min_bits) {
  const std::size_t bits_len = text.size() * 8;
  if (bits_len < min_bits) throw KeygenError("watchword too short");
  std::vector<bool> bits;
  bits.reserve(bits_len);
  for (unsigned char c : text)
    for (int i = 7; i >= 0; --i) bits.push_back(((c >> i) & 1) != 0);
  auto symbols = pack_bits(field, bits);
  if (symbols.size() > length) throw KeygenError("watchword too long");
  symbols.resize(length, 0);
  return Watchword{SymbolVector(field, std::move(symbols))};
}

Seed Seed::random(const Field& field, std::size_t length, Rng& rng) {
  SymbolVector s(field, length);
  for (auto& x : s.symbols) x = static_cast<Symbol>(rng.below(field.q()));
  return Seed{std::move(s)};
}

KeygenParams KeygenParams::make(Field field, std::size_t n, std::size_t k, std::size_t m, std::size_t p) {
  if (n < 2 || n % 2 != 0) throw KeygenError("code length n must be even and >= 2");
  if (k != n / 2) throw KeygenError("key length k must equal n / 2");
  if (m < 1 || m > k) throw KeygenError("identity length m must be in [1, n / 2]");
  if (p > n - k) throw KeygenError("segment offset p must be in [0, n - k]");
  if (n > field.q()) throw KeygenError("code length n exceeds field size q");
  return KeygenParams{std::move(field), n, k, m, p};
}

KeygenParams KeygenParams::production_default() { return make(Field(8), 14, 7, 7, 0); }

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kNetworkCoding:
      return "nc";
    case Scheme::kMd5:
      return "md5";
    case Scheme::kSha1:
      return "sha1";
    case Scheme::kSha256:
      return "sha256";
  }
  return "?";
}

std::string_view to_string(KeyRole r) { return r == KeyRole::kKeyA ? "KeyA" : "KeyB"; }

std::vector<std::uint8_t> serialize_symbols(const SymbolVector& symbols) {
  const std::size_t width = symbols.field.symbol_bytes();
  std::vector<std::uint8_t> out;
  out.reserve(symbols.size() * width);
  for (Symbol s : symbols.symbols)
    for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>(s >> (8 * i)));
  return out;
}

Key Key::from_symbols(const SymbolVector& symbols, KeyRole role) {
  return Key{Scheme::kNetworkCoding, role, serialize_symbols(symbols)};
}

SymbolVector Key::symbols(const Field& field) const {
  require_nc(*this);
  const std::size_t width = field.symbol_bytes();
  if (material.size() % width != 0) throw KeygenError("key material is not a whole number of symbols");
  std::vector<Symbol> out(material.size() / width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t v = 0;
    for (std::size_t j = 0; j < width; ++j) v = v << 8 | material[i * width + j];
    if (!field.contains(v)) throw KeygenError("key symbol out of field range");
    out[i] = static_cast<Symbol>(v);
  }
  return SymbolVector(field, std::move(out));
}

SymbolVector mix_tier1(const Identity& id, const Watchword& w, const KeygenParams& params) {
  if (id.m() != params.m) throw KeygenError("identity must have m symbols");
  if (w.symbols.size() != params.n - params.m) throw KeygenError("watchword must have n - m symbols");
  if (!(id.symbols().field == params.field) || !(w.symbols.field == params.field)) {
    throw gf::FieldMismatch("inputs over a different field");
  }
  SymbolVector b(params.field, params.n);
  std::copy(id.symbols().symbols.begin(), id.symbols().symbols.end(), b.symbols.begin());
  std::copy(w.symbols.symbols.begin(), w.symbols.symbols.end(),
            b.symbols.begin() + static_cast<std::ptrdiff_t>(params.m));
  return b;
}

Key derive_keyA(const SymbolVector& b, const VandermondeMatrix& a, const KeygenParams& params) {
  return segment_key(b, a, params, params.p, KeyRole::kKeyA);
}

SymbolVector mix_tier2(const Key& key_a, const Seed& seed, const KeygenParams& params) {
  require_nc(key_a);
  const SymbolVector ka = key_a.symbols(params.field);
  if (ka.size() != params.k) throw KeygenError("KeyA must have k symbols");
  if (seed.symbols.size() != params.n - params.k) throw KeygenError("seed must have n - k symbols");
  if (!(seed.symbols.field == params.field)) throw gf::FieldMismatch("seed over a different field");
  SymbolVector b(params.field, params.n);
  std::copy(ka.symbols.begin(), ka.symbols.end(), b.symbols.begin());
  std::copy(seed.symbols.symbols.begin(), seed.symbols.symbols.end(),
            b.symbols.begin() + static_cast<std::ptrdiff_t>(params.k));
  return b;
}

Key derive_keyB(const SymbolVector& b2, const VandermondeMatrix& a, const KeygenParams& params,
                std::size_t offset) {
  return segment_key(b2, a, params, offset, KeyRole::kKeyB);
}

Key hash_pseudonym(std::span<const std::uint8_t> input, DigestAlgorithm algo, std::size_t out_bits,
                   KeyRole role) {
  const std::size_t full = digest_bits(algo);
  if (out_bits == 0 || out_bits > full) {
    throw KeygenError("output length must be in [1, " + std::to_string(full) + "] bits");
  }
  auto d = digest(algo, input);
  d.resize((out_bits + 7) / 8);
  if (out_bits % 8 != 0) d.back() &= static_cast<std::uint8_t>(0xff << (8 - out_bits % 8));
  Scheme s = algo == DigestAlgorithm::kMd5    ? Scheme::kMd5
             : algo == DigestAlgorithm::kSha1 ? Scheme::kSha1
                                              : Scheme::kSha256;
  return Key{s, role, std::move(d)};
}

TwoTierCoder::TwoTierCoder(KeygenParams params, VandermondeMatrix a) : params_(std::move(params)), a_(std::move(a)) {
  if (!(a_.field() == params_.field) || a_.n() != params_.n) {
    throw KeygenError("matrix does not match key generation parameters");
  }
}

TwoTierCoder::TwoTierCoder(KeygenParams params)
    : TwoTierCoder(params, linalg::default_vandermonde(params.field, params.n)) {}

Key TwoTierCoder::key_a(const Identity& id, const Watchword& w) const {
  return derive_keyA(mix_tier1(id, w, params_), a_, params_);
}

Key TwoTierCoder::key_b(const Key& key_a, Rng& rng) const {
  Seed seed = Seed::random(params_.field, params_.n - params_.k, rng);
  const std::size_t offset = rng.below(params_.n - params_.k + 1);
  return key_b(key_a, seed, offset);
}

Key TwoTierCoder::key_b(const Key& key_a, const Seed& seed, std::size_t offset) const {
  return derive_keyB(mix_tier2(key_a, seed, params_), a_, params_, offset);
}

}  // namespace ncp::keygen

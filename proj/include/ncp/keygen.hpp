#pragma once

// Two-tier network-coding key generation.
//
//   tier 1: b  = (IMSI symbols | watchword symbols),  KeyA = (A b)_{p+1..p+k}
//   tier 2: b' = (KeyA symbols | seed symbols),       KeyB = (A b')_{p'+1..p'+k}
//
// Both tiers share the public Vandermonde matrix A. "Mixing" is positional
// concatenation, secret first. Offsets p, p' are public.
//
// Hash pseudonyms (MD5, SHA-1, SHA-256) are provided as the baseline.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ncp/digest.hpp"
#include "ncp/gf.hpp"
#include "ncp/linalg.hpp"
#include "ncp/rng.hpp"

namespace ncp::keygen {

using gf::Field;
using gf::Symbol;
using linalg::SymbolVector;
using linalg::VandermondeMatrix;

class KeygenError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bits needed to hold any d-digit decimal number: smallest L with 2^L >= 10^d.
// 15 digits (a standard IMSI) -> 50.
std::size_t imsi_bit_length(std::size_t digits);

// Splits a big-endian bit string into u-bit symbols, zero-padding the tail.
std::vector<Symbol> pack_bits(const Field& field, const std::vector<bool>& bits);

class Identity {
 public:
  // The digit string is read as a decimal integer and written as an
  // imsi_bit_length(d)-bit big-endian string, then packed with pack_bits.
  static Identity from_digits(const Field& field, std::string_view digits);
  static Identity from_symbols(SymbolVector symbols) {
    const std::size_t bits = symbols.size() * symbols.field.u();
    return Identity("", bits, std::move(symbols));
  }

  const std::string& digits() const { return digits_; }
  const SymbolVector& symbols() const { return symbols_; }
  std::size_t m() const { return symbols_.size(); }
  std::size_t bit_length() const { return bit_length_; }

  // Inverse of from_digits for a known digit count.
  static std::string to_digits(const SymbolVector& symbols, std::size_t digit_count);

 private:
  Identity(std::string digits, std::size_t bit_length, SymbolVector symbols)
      : digits_(std::move(digits)), bit_length_(bit_length), symbols_(std::move(symbols)) {}

  std::string digits_;
  std::size_t bit_length_;
  SymbolVector symbols_;
};

struct Watchword {
  SymbolVector symbols;

  // UTF-8 text packed 8 bits per byte into symbols, zero-padded to `length`
  // symbols. Throws KeygenError("watchword too short") when its bit length
  // is below min_bits and KeygenError("watchword too long") when it does
  // not fit.
  static Watchword from_text(const Field& field, std::string_view text, std::size_t length,
                             std::size_t min_bits);
};

struct Seed {
  SymbolVector symbols;

  static Seed random(const Field& field, std::size_t length, Rng& rng);
};

struct KeygenParams {
  Field field;
  std::size_t n;  // code length
  std::size_t k;  // key length, n / 2
  std::size_t m;  // identity length, <= n / 2
  std::size_t p;  // segment offset, <= n - k

  // Validates k = n/2, 1 <= m <= k, p <= n - k, n <= q.
  static KeygenParams make(Field field, std::size_t n, std::size_t k, std::size_t m, std::size_t p);
  // u=8, n=14, k=7, m=7 (a 50-bit IMSI), p = 0.
  static KeygenParams production_default();

  KeygenParams with_offset(std::size_t offset) const { return make(field, n, k, m, offset); }
};

enum class Scheme { kNetworkCoding, kMd5, kSha1, kSha256 };
enum class KeyRole { kKeyA, kKeyB };

std::string_view to_string(Scheme s);
std::string_view to_string(KeyRole r);

struct Key {
  Scheme scheme = Scheme::kNetworkCoding;
  KeyRole role = KeyRole::kKeyA;
  // Network coding: each symbol big-endian in ceil(u/8) bytes, ascending
  // index. Hash: the truncated digest.
  std::vector<std::uint8_t> material;

  std::string hex() const { return to_hex(material); }

  static Key from_symbols(const SymbolVector& symbols, KeyRole role);
  // Decodes network-coding material back into field symbols.
  SymbolVector symbols(const Field& field) const;

  friend bool operator==(const Key&, const Key&) = default;
};

// Canonical serialization of symbols: lowercase hex, big-endian per symbol.
std::vector<std::uint8_t> serialize_symbols(const SymbolVector& symbols);

SymbolVector mix_tier1(const Identity& id, const Watchword& w, const KeygenParams& params);
Key derive_keyA(const SymbolVector& b, const VandermondeMatrix& a, const KeygenParams& params);
SymbolVector mix_tier2(const Key& key_a, const Seed& seed, const KeygenParams& params);
Key derive_keyB(const SymbolVector& b2, const VandermondeMatrix& a, const KeygenParams& params,
                std::size_t offset);

// First out_bits of the digest; trailing bits of the last byte are zeroed.
Key hash_pseudonym(std::span<const std::uint8_t> input, DigestAlgorithm algo, std::size_t out_bits,
                   KeyRole role = KeyRole::kKeyA);

// Bundles the public matrix with the parameters for repeated derivations.
class TwoTierCoder {
 public:
  TwoTierCoder(KeygenParams params, VandermondeMatrix a);
  explicit TwoTierCoder(KeygenParams params);  // default Vandermonde of size n

  const KeygenParams& params() const { return params_; }
  const VandermondeMatrix& matrix() const { return a_; }

  Key key_a(const Identity& id, const Watchword& w) const;
  // Fresh seed and offset drawn from rng.
  Key key_b(const Key& key_a, Rng& rng) const;
  Key key_b(const Key& key_a, const Seed& seed, std::size_t offset) const;

 private:
  KeygenParams params_;
  VandermondeMatrix a_;
};

}  // namespace ncp::keygen

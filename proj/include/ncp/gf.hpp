#pragma once

// Arithmetic in GF(2^u), 1 <= u <= 16.
//
// Elements use the standard polynomial basis: bit i of the value is the
// coefficient of x^i. Every field is defined by a fixed reduction polynomial
// (see reduction_polynomial()) so results are bit-reproducible.
//
//   u  poly      u  poly       u  poly
//   1  0x3       7  0x83      13  0x201b
//   2  0x7       8  0x11b     14  0x4021
//   3  0xb       9  0x203     15  0x8003
//   4  0x13     10  0x409     16  0x1002b
//   5  0x25     11  0x805
//   6  0x43     12  0x1009

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncp::gf {

using Symbol = std::uint16_t;

inline constexpr unsigned kMaxExponent = 16;

class FieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FieldMismatch : public FieldError {
 public:
  using FieldError::FieldError;
};

class NoInverse : public std::domain_error {
 public:
  NoInverse() : std::domain_error("zero has no multiplicative inverse") {}
};

// Default reduction polynomial for GF(2^u) as a bitmask (bit u set).
std::uint32_t reduction_polynomial(unsigned u);

// True iff poly (bit u is its top bit) is irreducible over GF(2).
bool is_irreducible(std::uint32_t poly);

// A residue tagged with the polynomial of the field it belongs to.
struct FieldElement {
  std::uint32_t poly = 0;
  Symbol value = 0;

  friend bool operator==(const FieldElement&, const FieldElement&) = default;
};

// GF(2^u) context. Cheap to copy; lookup tables are shared and immutable.
class Field {
 public:
  // Canonical field for exponent u using reduction_polynomial(u).
  explicit Field(unsigned u);
  // Field with an explicit irreducible polynomial of degree u.
  Field(unsigned u, std::uint32_t poly);

  unsigned u() const { return u_; }
  std::uint32_t q() const { return std::uint32_t{1} << u_; }
  std::uint32_t poly() const { return poly_; }
  // Bytes per symbol in canonical serialization.
  std::size_t symbol_bytes() const { return (u_ + 7) / 8; }

  bool contains(std::uint32_t v) const { return v < q(); }
  FieldElement element(std::uint32_t v) const;
  FieldElement zero() const { return {poly_, 0}; }
  FieldElement one() const { return {poly_, 1}; }

  FieldElement add(FieldElement x, FieldElement y) const;
  FieldElement mul(FieldElement x, FieldElement y) const;
  FieldElement inv(FieldElement x) const;
  FieldElement pow(FieldElement x, std::uint64_t e) const;

  // Unchecked symbol kernels; callers guarantee symbols are in range.
  static Symbol add(Symbol x, Symbol y) { return static_cast<Symbol>(x ^ y); }
  Symbol mul(Symbol x, Symbol y) const {
    if (x == 0 || y == 0) return 0;
    return tables_->exp[tables_->log[x] + tables_->log[y]];
  }
  Symbol inv(Symbol x) const;
  Symbol pow(Symbol x, std::uint64_t e) const;
  Symbol div(Symbol x, Symbol y) const { return mul(x, inv(y)); }

  friend bool operator==(const Field& a, const Field& b) { return a.poly_ == b.poly_; }

 private:
  struct Tables {
    std::vector<Symbol> exp;         // 2(q-1) entries, so log sums need no reduction
    std::vector<std::uint32_t> log;  // log[0] unused
  };

  void check(FieldElement x) const;
  static std::shared_ptr<const Tables> build_tables(unsigned u, std::uint32_t poly);
  static std::shared_ptr<const Tables> canonical_tables(unsigned u);

  unsigned u_;
  std::uint32_t poly_;
  std::shared_ptr<const Tables> tables_;
};

std::string to_string(const Field& f);

}  // namespace ncp::gf

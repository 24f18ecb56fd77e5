#include "ncp/gf.hpp"

#include <array>
#include <bit>
#include <mutex>

namespace ncp::gf {

namespace {

constexpr std::array<std::uint32_t, kMaxExponent + 1> kPolys = {
    0,      0x3,    0x7,    0xb,    0x13,   0x25,   0x43,   0x83,    0x11b,
    0x203,  0x409,  0x805,  0x1009, 0x201b, 0x4021, 0x8003, 0x1002b,
};

unsigned degree(std::uint32_t p) { return static_cast<unsigned>(std::bit_width(p)) - 1; }

// Shift-and-add product with reduction folded into each shift.
std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b, unsigned u, std::uint32_t poly) {
  std::uint32_t r = 0;
  const std::uint32_t top = std::uint32_t{1} << u;
  while (b) {
    if (b & 1) r ^= a;
    b >>= 1;
    a <<= 1;
    if (a & top) a ^= poly;
  }
  return r;
}

void validate_exponent(unsigned u) {
  if (u < 1 || u > kMaxExponent) {
    throw FieldError("field exponent u must be in [1, 16], got " + std::to_string(u));
  }
}

}  // namespace

std::uint32_t reduction_polynomial(unsigned u) {
  validate_exponent(u);
  return kPolys[u];
}

bool is_irreducible(std::uint32_t poly) {
  if (poly < 2) return false;
  const unsigned d = degree(poly);
  // Trial division by every polynomial of degree 1..d/2.
  for (std::uint32_t f = 2; degree(f) <= d / 2; ++f) {
    std::uint32_t r = poly;
    const unsigned df = degree(f);
    while (r && degree(r) >= df) r ^= f << (degree(r) - df);
    if (r == 0) return false;
  }
  return true;
}

Field::Field(unsigned u) : u_(u), poly_(reduction_polynomial(u)), tables_(canonical_tables(u)) {}

Field::Field(unsigned u, std::uint32_t poly) : u_(u), poly_(poly) {
  validate_exponent(u);
  if (degree(poly) != u) throw FieldError("reduction polynomial degree differs from u");
  if (!is_irreducible(poly)) throw FieldError("reduction polynomial is reducible");
  tables_ = poly == kPolys[u] ? canonical_tables(u) : build_tables(u, poly);
}

std::shared_ptr<const Field::Tables> Field::canonical_tables(unsigned u) {
  static std::array<std::shared_ptr<const Tables>, kMaxExponent + 1> cache;
  static std::array<std::once_flag, kMaxExponent + 1> once;
  validate_exponent(u);
  std::call_once(once[u], [u] { cache[u] = build_tables(u, kPolys[u]); });
  return cache[u];
}

std::shared_ptr<const Field::Tables> Field::build_tables(unsigned u, std::uint32_t poly) {
  const std::uint32_t q = std::uint32_t{1} << u;
  const std::uint32_t order = q - 1;

  // Find a generator of the multiplicative group. The polynomial need not
  // be primitive (0x11b is not), so x itself may not generate.
  std::uint32_t gen = 1;
  for (std::uint32_t g = (q == 2 ? 1 : 2); g < q; ++g) {
    std::uint32_t x = g;
    std::uint32_t k = 1;
    while (x != 1) {
      x = slow_mul(x, g, u, poly);
      ++k;
    }
    if (k == order) {
      gen = g;
      break;
    }
  }

  auto t = std::make_shared<Tables>();
  t->exp.resize(2 * static_cast<std::size_t>(order));
  t->log.assign(q, 0);
  std::uint32_t x = 1;
  for (std::uint32_t i = 0; i < order; ++i) {
    t->exp[i] = static_cast<Symbol>(x);
    t->exp[i + order] = static_cast<Symbol>(x);
    t->log[x] = i;
    x = slow_mul(x, gen, u, poly);
  }
  return t;
}

void Field::check(FieldElement x) const {
  if (x.poly != poly_) throw FieldMismatch("element belongs to a different field");
  if (x.value >= q()) throw FieldError("element value out of range");
}

FieldElement Field::element(std::uint32_t v) const {
  if (!contains(v)) {
    throw FieldError("value " + std::to_string(v) + " not in GF(2^" + std::to_string(u_) + ")");
  }
  return {poly_, static_cast<Symbol>(v)};
}

FieldElement Field::add(FieldElement x, FieldElement y) const {
  check(x);
  check(y);
  return {poly_, add(x.value, y.value)};
}

FieldElement Field::mul(FieldElement x, FieldElement y) const {
  check(x);
  check(y);
  return {poly_, mul(x.value, y.value)};
}

FieldElement Field::inv(FieldElement x) const {
  check(x);
  return {poly_, inv(x.value)};
}

FieldElement Field::pow(FieldElement x, std::uint64_t e) const {
  check(x);
  return {poly_, pow(x.value, e)};
}

Symbol Field::inv(Symbol x) const {
  if (x == 0) throw NoInverse();
  const std::uint32_t order = q() - 1;
  return tables_->exp[(order - tables_->log[x]) % order];
}

Symbol Field::pow(Symbol x, std::uint64_t e) const {
  if (e == 0) return 1;  // including 0^0
  if (x == 0) return 0;
  const std::uint64_t order = q() - 1;
  return tables_->exp[(tables_->log[x] * (e % order)) % order];
}

std::string to_string(const Field& f) {
  return "GF(2^" + std::to_string(f.u()) + ")";
}

}  // namespace ncp::gf

#pragma once

// Dense matrices over GF(2^u), Vandermonde construction, encoding and the
// segment reduction used by the security analysis.
//
// Documentation uses the 1-indexed convention entry(i, j) = a_j^(i-1);
// storage is 0-indexed row-major.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ncp/gf.hpp"

namespace ncp::linalg {

using gf::Field;
using gf::Symbol;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ordered list of field symbols (b, c, key segments, seeds).
struct SymbolVector {
  Field field;
  std::vector<Symbol> symbols;

  SymbolVector(Field f, std::vector<Symbol> s);
  explicit SymbolVector(Field f, std::size_t n = 0) : field(std::move(f)), symbols(n, 0) {}

  std::size_t size() const { return symbols.size(); }
  Symbol operator[](std::size_t i) const { return symbols[i]; }
  Symbol& operator[](std::size_t i) { return symbols[i]; }

  // Positions [offset, offset + len).
  SymbolVector slice(std::size_t offset, std::size_t len) const;

  friend bool operator==(const SymbolVector& a, const SymbolVector& b) {
    return a.field == b.field && a.symbols == b.symbols;
  }
};

// Componentwise field addition.
SymbolVector operator+(const SymbolVector& a, const SymbolVector& b);

class Matrix {
 public:
  Matrix(Field field, std::size_t rows, std::size_t cols);

  const Field& field() const { return field_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Symbol operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  Symbol& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const Symbol> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  static Matrix identity(const Field& field, std::size_t n);

  // Rows [first, first + count), all columns.
  Matrix row_block(std::size_t first, std::size_t count) const;
  // Rows and columns [first, first + count).
  Matrix square_block(std::size_t first, std::size_t count) const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.field_ == b.field_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  Field field_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Symbol> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
SymbolVector operator*(const Matrix& a, const SymbolVector& x);

// Row rank by Gaussian elimination.
std::size_t rank(const Matrix& m);

// Inverse of a square matrix; throws std::domain_error if singular.
Matrix inverse(const Matrix& m);

// Which evaluation points a Vandermonde matrix may use.
enum class CoefficientDomain {
  // Distinct nonzero points; requires n < q. The default.
  kNonzero,
  // Distinct points, zero allowed; allows n == q. The zero point's column
  // is (1, 0, ..., 0), so segments starting past row 1 lose that column.
  kAnyDistinct,
};

class VandermondeMatrix {
 public:
  const Field& field() const { return entries_.field(); }
  std::size_t n() const { return coeffs_.size(); }
  const std::vector<Symbol>& coeffs() const { return coeffs_; }
  CoefficientDomain domain() const { return domain_; }
  const Matrix& entries() const { return entries_; }
  Symbol operator()(std::size_t r, std::size_t c) const { return entries_(r, c); }

 private:
  friend VandermondeMatrix build_vandermonde(const Field&, std::span<const Symbol>,
                                             CoefficientDomain);
  VandermondeMatrix(std::vector<Symbol> coeffs, Matrix entries, CoefficientDomain domain)
      : coeffs_(std::move(coeffs)), entries_(std::move(entries)), domain_(domain) {}

  std::vector<Symbol> coeffs_;
  Matrix entries_;
  CoefficientDomain domain_;
};

// entry(i, j) = coeffs[j]^(i-1). Throws DimensionError on duplicate or
// out-of-domain coefficients.
VandermondeMatrix build_vandermonde(const Field& field, std::span<const Symbol> coeffs,
                                    CoefficientDomain domain = CoefficientDomain::kNonzero);

// a_j = j for j = 1..n (kNonzero) or a_j = j - 1 (kAnyDistinct).
std::vector<Symbol> default_coefficients(const Field& field, std::size_t n,
                                         CoefficientDomain domain = CoefficientDomain::kNonzero);

// Convenience: build_vandermonde over default_coefficients.
VandermondeMatrix default_vandermonde(const Field& field, std::size_t n,
                                      CoefficientDomain domain = CoefficientDomain::kNonzero);

// c = A b.
SymbolVector encode(const VandermondeMatrix& a, const SymbolVector& b);

// Segment c_{offset+1 .. offset+len} of A b without forming the full product.
SymbolVector encode_segment(const VandermondeMatrix& a, const SymbolVector& b,
                            std::size_t offset, std::size_t len);

// The adversary's view of a key segment after Gaussian elimination.
//
// With S the k x k block of A at rows/cols p+1..p+k, reduced = S^-1 A_{p+1:p+k}
// has the identity in columns p+1..p+k, and v = S^-1 c_{p+1:p+k} satisfies
//   v_i = sum_{j<=p} M_ij b_j + b_i + sum_{j>p+k} M_ij b_j.
struct ReducedSystem {
  Matrix reduced;      // k x n
  Matrix v_transform;  // k x k, S^-1
  std::size_t offset;  // p
  std::size_t length;  // k

  SymbolVector reduce(const SymbolVector& observed_segment) const;
};

ReducedSystem reduce_segment(const VandermondeMatrix& a, std::size_t offset, std::size_t length);

}  // namespace ncp::linalg

#include "ncp/linalg.hpp"

#include <algorithm>
#include <string>

namespace ncp::linalg {

SymbolVector::SymbolVector(Field f, std::vector<Symbol> s) : field(std::move(f)), symbols(std::move(s)) {
  for (Symbol x : symbols) {
    if (!field.contains(x)) throw gf::FieldError("symbol " + std::to_string(x) + " out of range");
  }
}

SymbolVector SymbolVector::slice(std::size_t offset, std::size_t len) const {
  if (offset + len > symbols.size()) throw DimensionError("slice exceeds vector length");
  return SymbolVector(field, std::vector<Symbol>(symbols.begin() + static_cast<std::ptrdiff_t>(offset),
                                                 symbols.begin() + static_cast<std::ptrdiff_t>(offset + len)));
}

SymbolVector operator+(const SymbolVector& a, const SymbolVector& b) {
  if (!(a.field == b.field)) throw gf::FieldMismatch("vectors over different fields");
  if (a.size() != b.size()) throw DimensionError("vector length mismatch");
  SymbolVector r(a.field, a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = Field::add(a[i], b[i]);
  return r;
}

Matrix::Matrix(Field field, std::size_t rows, std::size_t cols)
    : field_(std::move(field)), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

Matrix Matrix::identity(const Field& field, std::size_t n) {
  Matrix m(field, n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw DimensionError("row block out of range");
  Matrix m(field_, count, cols_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_, m.data_.begin());
  return m;
}

Matrix Matrix::square_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_ || first + count > cols_) throw DimensionError("square block out of range");
  Matrix m(field_, count, count);
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < count; ++c) m(r, c) = (*this)(first + r, first + c);
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (!(a.field() == b.field())) throw gf::FieldMismatch("matrices over different fields");
  if (a.cols() != b.rows()) throw DimensionError("matrix product dimension mismatch");
  const Field& f = a.field();
  Matrix r(f, a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Symbol aik = a(i, k);
      if (aik == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) ^= f.mul(aik, b(k, j));
    }
  return r;
}

SymbolVector operator*(const Matrix& a, const SymbolVector& x) {
  if (!(a.field() == x.field)) throw gf::FieldMismatch("matrix and vector over different fields");
  if (a.cols() != x.size()) throw DimensionError("matrix-vector dimension mismatch");
  const Field& f = a.field();
  SymbolVector r(f, a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Symbol acc = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc ^= f.mul(a(i, j), x[j]);
    r[i] = acc;
  }
  return r;
}

std::size_t rank(const Matrix& m) {
  Matrix w = m;
  const Field& f = w.field();
  std::size_t r = 0;
  for (std::size_t c = 0; c < w.cols() && r < w.rows(); ++c) {
    std::size_t pivot = r;
    while (pivot < w.rows() && w(pivot, c) == 0) ++pivot;
    if (pivot == w.rows()) continue;
    for (std::size_t j = 0; j < w.cols(); ++j) std::swap(w(r, j), w(pivot, j));
    const Symbol inv = f.inv(w(r, c));
    for (std::size_t i = r + 1; i < w.rows(); ++i) {
      const Symbol factor = f.mul(w(i, c), inv);
      if (factor == 0) continue;
      for (std::size_t j = c; j < w.cols(); ++j) w(i, j) ^= f.mul(factor, w(r, j));
    }
    ++r;
  }
  return r;
}

Matrix inverse(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("inverse of non-square matrix");
  const Field& f = m.field();
  const std::size_t n = m.rows();
  Matrix w = m;
  Matrix inv = Matrix::identity(f, n);
  // Gauss-Jordan on [w | inv].
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    while (pivot < n && w(pivot, c) == 0) ++pivot;
    if (pivot == n) throw std::domain_error("matrix is singular");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(w(c, j), w(pivot, j));
      std::swap(inv(c, j), inv(pivot, j));
    }
    const Symbol s = f.inv(w(c, c));
    for (std::size_t j = 0; j < n; ++j) {
      w(c, j) = f.mul(w(c, j), s);
      inv(c, j) = f.mul(inv(c, j), s);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || w(i, c) == 0) continue;
      const Symbol factor = w(i, c);
      for (std::size_t j = 0; j < n; ++j) {
        w(i, j) ^= f.mul(factor, w(c, j));
        inv(i, j) ^= f.mul(factor, inv(c, j));
      }
    }
  }
  return inv;
}

VandermondeMatrix build_vandermonde(const Field& field, std::span<const Symbol> coeffs,
                                    CoefficientDomain domain) {
  const std::size_t n = coeffs.size();
  if (n == 0) throw DimensionError("Vandermonde matrix needs at least one coefficient");
  if (domain == CoefficientDomain::kNonzero ? n >= field.q() : n > field.q()) {
    throw DimensionError("n = " + std::to_string(n) + " too large for " + gf::to_string(field));
  }
  std::vector<bool> seen(field.q(), false);
  for (Symbol a : coeffs) {
    if (!field.contains(a)) throw DimensionError("coefficient out of field range");
    if (a == 0 && domain == CoefficientDomain::kNonzero) throw DimensionError("zero coefficient");
    if (seen[a]) throw DimensionError("duplicate coefficient " + std::to_string(a));
    seen[a] = true;
  }

  Matrix entries(field, n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Symbol power = 1;
    for (std::size_t i = 0; i < n; ++i) {
      entries(i, j) = power;
      power = field.mul(power, coeffs[j]);
    }
  }
  return VandermondeMatrix(std::vector<Symbol>(coeffs.begin(), coeffs.end()), std::move(entries), domain);
}

std::vector<Symbol> default_coefficients(const Field& field, std::size_t n, CoefficientDomain domain) {
  const std::size_t first = domain == CoefficientDomain::kNonzero ? 1 : 0;
  if (first + n > field.q()) {
    throw DimensionError("n = " + std::to_string(n) + " too large for " + gf::to_string(field));
  }
  std::vector<Symbol> c(n);
  for (std::size_t j = 0; j < n; ++j) c[j] = static_cast<Symbol>(first + j);
  return c;
}

VandermondeMatrix default_vandermonde(const Field& field, std::size_t n, CoefficientDomain domain) {
  const auto coeffs = default_coefficients(field, n, domain);
  return build_vandermonde(field, coeffs, domain);
}

SymbolVector encode(const VandermondeMatrix& a, const SymbolVector& b) {
  return encode_segment(a, b, 0, a.n());
}

SymbolVector encode_segment(const VandermondeMatrix& a, const SymbolVector& b, std::size_t offset,
                            std::size_t len) {
  if (!(b.field == a.field())) throw gf::FieldMismatch("vector over a different field");
  if (b.size() != a.n()) {
    throw DimensionError("expected " + std::to_string(a.n()) + " symbols, got " + std::to_string(b.size()));
  }
  if (offset + len > a.n()) throw DimensionError("segment exceeds code length");
  const Field& f = a.field();
  SymbolVector c(f, len);
  for (std::size_t i = 0; i < len; ++i) {
    Symbol acc = 0;
    for (std::size_t j = 0; j < a.n(); ++j) acc ^= f.mul(a(offset + i, j), b[j]);
    c[i] = acc;
  }
  return c;
}

SymbolVector ReducedSystem::reduce(const SymbolVector& observed_segment) const {
  return v_transform * observed_segment;
}

ReducedSystem reduce_segment(const VandermondeMatrix& a, std::size_t offset, std::size_t length) {
  if (length < 1 || length > a.n()) throw DimensionError("segment length must be in [1, n]");
  if (offset > a.n() - length) throw DimensionError("segment offset must be in [0, n - k]");
  const Matrix s = a.entries().square_block(offset, length);
  Matrix s_inv = [&] {
    try {
      return inverse(s);
    } catch (const std::domain_error&) {
      throw std::domain_error("segment block is singular (zero evaluation point past row 1?)");
    }
  }();
  Matrix reduced = s_inv * a.entries().row_block(offset, length);
  return ReducedSystem{std::move(reduced), std::move(s_inv), offset, length};
}

}  // namespace ncp::linalg

#include "cpnet/matrix.hpp"

#include <algorithm>

namespace cpnet {

FieldMatrix::FieldMatrix(FieldSpec spec, std::size_t rows, std::size_t cols,
                         std::vector<gf_t> entries)
    : spec_(std::move(spec)), rows_(rows), cols_(cols),
      entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_)
    throw std::invalid_argument("FieldMatrix: entries length != rows*cols");
  for (gf_t e : entries_) {
    if (e >= spec_.order())
      throw std::invalid_argument("FieldMatrix: entry out of field range");
  }
}

FieldMatrix FieldMatrix::identity(FieldSpec spec, std::size_t n) {
  FieldMatrix m(std::move(spec), n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

FieldMatrix FieldMatrix::transposed() const {
  FieldMatrix t(spec_, cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

FieldMatrix mat_mul(const FieldMatrix& A, const FieldMatrix& B) {
  if (A.cols() != B.rows())
    throw std::invalid_argument("mat_mul: dimension mismatch");
  const FieldSpec& f = A.field();
  FieldMatrix C(f, A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t k = 0; k < A.cols(); ++k) {
      gf_t a = A(i, k);
      if (a == 0) continue;
      for (std::size_t j = 0; j < B.cols(); ++j)
        C(i, j) = FieldSpec::add(C(i, j), f.mul(a, B(k, j)));
    }
  return C;
}

namespace {

// In-place forward elimination; returns rank.  Column order is left to right.
std::size_t eliminate(FieldMatrix& M) {
  const FieldSpec& f = M.field();
  std::size_t rank = 0;
  for (std::size_t col = 0; col < M.cols() && rank < M.rows(); ++col) {
    std::size_t piv = rank;
    while (piv < M.rows() && M(piv, col) == 0) ++piv;
    if (piv == M.rows()) continue;
    if (piv != rank)
      for (std::size_t c = 0; c < M.cols(); ++c)
        std::swap(M(piv, c), M(rank, c));
    gf_t inv = f.inv(M(rank, col));
    for (std::size_t c = col; c < M.cols(); ++c)
      M(rank, c) = f.mul(M(rank, c), inv);
    for (std::size_t r = 0; r < M.rows(); ++r) {
      if (r == rank) continue;
      gf_t factor = M(r, col);
      if (factor == 0) continue;
      for (std::size_t c = col; c < M.cols(); ++c)
        M(r, c) = FieldSpec::add(M(r, c), f.mul(factor, M(rank, c)));
    }
    ++rank;
  }
  return rank;
}

}  // namespace

std::size_t mat_rank(const FieldMatrix& M) {
  FieldMatrix work = M;
  return eliminate(work);
}

FieldMatrix gauss_solve(const FieldMatrix& A, const FieldMatrix& B) {
  if (A.rows() != B.rows())
    throw std::invalid_argument("gauss_solve: row count mismatch");
  const FieldSpec& f = A.field();
  std::size_t n = A.cols();
  FieldMatrix aug(f, A.rows(), n + B.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) aug(r, c) = A(r, c);
    for (std::size_t c = 0; c < B.cols(); ++c) aug(r, n + c) = B(r, c);
  }
  std::size_t rank = eliminate(aug);
  // Need full column rank on A and no inconsistent residual rows.
  FieldMatrix awork = A;
  if (eliminate(awork) < n) throw SingularSystem("gauss_solve: rank deficient");
  for (std::size_t r = rank; r < aug.rows(); ++r)
    for (std::size_t c = n; c < aug.cols(); ++c)
      if (aug(r, c) != 0) throw SingularSystem("gauss_solve: inconsistent");
  FieldMatrix X(f, n, B.cols());
  // After full elimination the first n pivot rows carry the identity on A's
  // columns (A has full column rank), so the solution reads off directly.
  for (std::size_t r = 0; r < rank; ++r) {
    std::size_t col = 0;
    while (col < n && aug(r, col) == 0) ++col;
    if (col == n) continue;
    for (std::size_t c = 0; c < B.cols(); ++c) X(col, c) = aug(r, n + c);
  }
  return X;
}

bool RrefBasis::reduce(std::vector<gf_t>& row) const {
  const FieldSpec& f = spec_;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    gf_t factor = row[pivots_[i]];
    if (factor == 0) continue;
    const auto& base = rows_[i];
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = FieldSpec::add(row[c], f.mul(factor, base[c]));
  }
  for (std::size_t c = 0; c < width_ && c < row.size(); ++c)
    if (row[c] != 0) return true;
  return false;
}

bool RrefBasis::absorb(std::vector<gf_t> row) {
  if (!reduce(row)) return false;
  std::size_t piv = 0;
  while (row[piv] == 0) ++piv;
  gf_t inv = spec_.inv(row[piv]);
  for (auto& e : row) e = spec_.mul(e, inv);
  // Back-substitute into existing rows to keep the basis fully reduced.
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    gf_t factor = rows_[i][piv];
    if (factor == 0) continue;
    for (std::size_t c = 0; c < rows_[i].size(); ++c)
      rows_[i][c] = FieldSpec::add(rows_[i][c], spec_.mul(factor, row[c]));
  }
  auto pos = std::lower_bound(pivots_.begin(), pivots_.end(), piv);
  std::size_t idx = static_cast<std::size_t>(pos - pivots_.begin());
  pivots_.insert(pos, piv);
  rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(idx),
               std::move(row));
  return true;
}

}  // namespace cpnet

#pragma once

#include <cstddef>
#include <vector>

#include "cpnet/gf.hpp"

namespace cpnet {

/// Thrown by gauss_solve when the system is rank deficient or inconsistent.
struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const char* what) : std::runtime_error(what) {}
};

/// Dense row-major matrix over GF(2^m).
class FieldMatrix {
 public:
  FieldMatrix(FieldSpec spec, std::size_t rows, std::size_t cols)
      : spec_(std::move(spec)), rows_(rows), cols_(cols),
        entries_(rows * cols, 0) {}

  FieldMatrix(FieldSpec spec, std::size_t rows, std::size_t cols,
              std::vector<gf_t> entries);

  static FieldMatrix identity(FieldSpec spec, std::size_t n);

  gf_t operator()(std::size_t r, std::size_t c) const {
    return entries_[r * cols_ + c];
  }
  gf_t& operator()(std::size_t r, std::size_t c) {
    return entries_[r * cols_ + c];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const FieldSpec& field() const { return spec_; }
  const std::vector<gf_t>& entries() const { return entries_; }

  FieldMatrix transposed() const;

 private:
  FieldSpec spec_;
  std::size_t rows_, cols_;
  std::vector<gf_t> entries_;
};

FieldMatrix mat_mul(const FieldMatrix& A, const FieldMatrix& B);

/// Rank over GF(2^m) by Gaussian elimination.
std::size_t mat_rank(const FieldMatrix& M);

/// Solves A X = B exactly.  A must have full column rank and the system must
/// be consistent; otherwise SingularSystem is thrown.
FieldMatrix gauss_solve(const FieldMatrix& A, const FieldMatrix& B);

/// Incremental row-reduced echelon basis over GF(2^m).  Rows are vectors of
/// fixed width; absorbing a dependent row is a no-op.  Used by the decoder
/// and by nodes that filter dependent packets.
class RrefBasis {
 public:
  RrefBasis(FieldSpec spec, std::size_t width)
      : spec_(std::move(spec)), width_(width) {}

  /// Reduces `row` against the basis; inserts it if independent.
  /// Returns true when the rank increased.
  bool absorb(std::vector<gf_t> row);

  /// Reduces `row` in place without inserting.  Returns true if the residue
  /// is nonzero (i.e. the row was independent of the basis).
  bool reduce(std::vector<gf_t>& row) const;

  std::size_t rank() const { return rows_.size(); }
  std::size_t width() const { return width_; }
  const std::vector<std::vector<gf_t>>& rows() const { return rows_; }
  const std::vector<std::size_t>& pivots() const { return pivots_; }
  const FieldSpec& field() const { return spec_; }

 private:
  FieldSpec spec_;
  std::size_t width_;
  std::vector<std::vector<gf_t>> rows_;   // kept in RREF, sorted by pivot
  std::vector<std::size_t> pivots_;
};

}  // namespace cpnet

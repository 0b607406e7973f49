#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fasdnn/errors.hpp"

namespace fasdnn {

/**
 * Row-major dense matrix of doubles. Rows are samples, columns are features
 * everywhere in the library.
 *
 * All values are finite: constructors and the arithmetic helpers below throw
 * NonFiniteError rather than let a NaN or Inf through.
 */
class Matrix {
public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) {
      throw NonFiniteError("Matrix fill value is not finite");
    }
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("Matrix data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(rows_, cols_));
    }
    check_finite("Matrix");
  }

  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) {
        throw ShapeError("Matrix initializer rows have unequal lengths");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
    check_finite("Matrix");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      m(i, i) = 1.0;
    }
    return m;
  }

  static Matrix row_vector(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  bool all_finite() const noexcept {
    for (double v : data_) {
      if (!std::isfinite(v)) {
        return false;
      }
    }
    return true;
  }

  // Throws NonFiniteError naming `where` if any entry is NaN/Inf.
  void check_finite(const char* where) const {
    if (!all_finite()) {
      throw NonFiniteError(std::string(where) + ": non-finite value in " + shape() + " matrix");
    }
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out_row[j] += aik * b_row[j];
      }
    }
  }
  out.check_finite("matmul");
  return out;
}

inline Matrix add_row_broadcast(const Matrix& a, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_row_broadcast: bias " + bias.shape() + " does not fit " + a.shape());
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      r[j] += bias(0, j);
    }
  }
  out.check_finite("add_row_broadcast");
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(j, i) = a(i, j);
    }
  }
  return out;
}

// Elementwise product.
inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("hadamard: " + a.shape() + " vs " + b.shape());
  }
  Matrix out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] *= bd[i];
  }
  out.check_finite("hadamard");
  return out;
}

// 1 x cols matrix of column sums.
inline Matrix column_sums(const Matrix& a) {
  Matrix out(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(0, j) += r[j];
    }
  }
  out.check_finite("column_sums");
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) {
    s += v * v;
  }
  return std::sqrt(s);
}

// Ties go to the lower column index.
inline std::vector<std::size_t> argmax_rows(const Matrix& a) {
  std::vector<std::size_t> out;
  if (a.empty()) {
    return out;
  }
  out.reserve(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) {
        best = j;
      }
    }
    out.push_back(best);
  }
  return out;
}

/**
 * Deterministic random source.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. Distributions are implemented here rather than taken from
 * <random>, because the standard library distributions differ between
 * vendors:
 *   - uniform():  top 53 bits of one engine draw, times 2^-53, in [0, 1)
 *   - below(n):   Lemire's multiply-shift with rejection, unbiased
 *   - normal():   Box-Muller, one value per call (the sine branch is dropped)
 *   - shuffle(n): Fisher-Yates, i from n-1 down to 1, swap i with below(i+1)
 *
 * Derived seeds for parallel runs use the SplitMix64 finalizer over
 * seed + stream * 0x9E3779B97F4A7C15 (see derive_seed).
 */
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t below(std::uint64_t n) {
    if (n == 0) {
      throw ContractError("SeededRng::below: n must be positive");
    }
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::vector<std::size_t> shuffle(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle_in_place(std::span<std::size_t>(perm));
    return perm;
  }

  template <typename T>
  void shuffle_in_place(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent seed for sub-stream `stream` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed + stream * 0x9E3779B97F4A7C15ULL);
}

} // namespace fasdnn

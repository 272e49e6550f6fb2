#ifndef IMGNB_MATRIX_HPP
#define IMGNB_MATRIX_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace imgnb {

/// Dense row-major matrix of doubles. The only storage type used by the
/// networks, graphs and GCN scorers.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;

    bool operator==(const DenseMatrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a (r x k) times b (k x c). Throws std::invalid_argument on shape mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

/// a^T (k x r -> r x k) times b (k x c); used by the backward passes.
DenseMatrix matmul_transpose_a(const DenseMatrix& a, const DenseMatrix& b);

/// a (r x k) times b^T (c x k).
DenseMatrix matmul_transpose_b(const DenseMatrix& a, const DenseMatrix& b);

void relu_inplace(DenseMatrix& m);

/// Cholesky factorization of a symmetric positive definite matrix, for the
/// ridge-regression solves in LinUCB. Factor once, solve repeatedly.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const DenseMatrix& a);
    std::vector<double> solve(std::span<const double> b) const;

private:
    DenseMatrix l_;  // lower triangular
};

}  // namespace imgnb

#endif  // IMGNB_MATRIX_HPP

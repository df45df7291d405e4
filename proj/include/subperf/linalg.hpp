#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace subperf {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values) {
        assert(values.size() == cols_ || rows_ == 0);
        if (rows_ == 0) cols_ = values.size();
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Householder QR of a tall matrix (rows >= cols), unpivoted.
///
/// The reflectors are stored below the diagonal of `qr_`; R sits on and above
/// it. Rank deficiency is reported per column rather than thrown, so callers
/// can name the offending columns.
class HouseholderQr {
public:
    explicit HouseholderQr(Matrix a) : qr_(std::move(a)), beta_(qr_.cols(), 0.0), col_norm_(qr_.cols(), 0.0) {
        const std::size_t m = qr_.rows();
        const std::size_t n = qr_.cols();
        assert(m >= n);
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += qr_(i, j) * qr_(i, j);
            col_norm_[j] = std::sqrt(s);
        }
        for (std::size_t j = 0; j < n; ++j) {
            double norm = 0.0;
            for (std::size_t i = j; i < m; ++i) norm += qr_(i, j) * qr_(i, j);
            norm = std::sqrt(norm);
            if (norm == 0.0) {
                beta_[j] = 0.0;
                continue;
            }
            const double alpha = qr_(j, j) > 0.0 ? -norm : norm;
            // v = x - alpha e1, stored with v_0 = x_0 - alpha in place.
            const double v0 = qr_(j, j) - alpha;
            qr_(j, j) = v0;
            double vtv = 0.0;
            for (std::size_t i = j; i < m; ++i) vtv += qr_(i, j) * qr_(i, j);
            beta_[j] = 2.0 / vtv;
            for (std::size_t k = j + 1; k < n; ++k) {
                double dot = 0.0;
                for (std::size_t i = j; i < m; ++i) dot += qr_(i, j) * qr_(i, k);
                const double f = beta_[j] * dot;
                for (std::size_t i = j; i < m; ++i) qr_(i, k) -= f * qr_(i, j);
            }
            // Normalize the stored reflector so v_0 == 1 and keep R_jj separately.
            for (std::size_t i = j + 1; i < m; ++i) qr_(i, j) /= v0;
            beta_[j] *= v0 * v0;
            qr_(j, j) = alpha;
        }
    }

    std::size_t rows() const noexcept { return qr_.rows(); }
    std::size_t cols() const noexcept { return qr_.cols(); }

    double r(std::size_t i, std::size_t j) const { return i <= j ? qr_(i, j) : 0.0; }

    /// Columns whose diagonal of R is negligible relative to the column norm,
    /// i.e. columns (numerically) in the span of the preceding ones.
    std::vector<std::size_t> deficient_columns(double rel_tol = 1e-10) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < cols(); ++j) {
            if (col_norm_[j] == 0.0 || std::abs(qr_(j, j)) <= rel_tol * col_norm_[j]) out.push_back(j);
        }
        return out;
    }

    /// Overwrites b with Q^T b.
    void apply_qt(std::span<double> b) const {
        const std::size_t m = rows();
        for (std::size_t j = 0; j < cols(); ++j) {
            if (beta_[j] == 0.0) continue;
            double dot = b[j];
            for (std::size_t i = j + 1; i < m; ++i) dot += qr_(i, j) * b[i];
            const double f = beta_[j] * dot;
            b[j] -= f;
            for (std::size_t i = j + 1; i < m; ++i) b[i] -= f * qr_(i, j);
        }
    }

    /// Least-squares solution of A x = b.
    std::vector<double> solve(std::span<const double> b) const {
        std::vector<double> qtb(b.begin(), b.end());
        apply_qt(qtb);
        const std::size_t n = cols();
        std::vector<double> x(n, 0.0);
        for (std::size_t ii = n; ii-- > 0;) {
            double s = qtb[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= qr_(ii, k) * x[k];
            x[ii] = s / qr_(ii, ii);
        }
        return x;
    }

    /// Solves R^T z = v by forward substitution.
    std::vector<double> solve_rt(std::span<const double> v) const {
        const std::size_t n = cols();
        std::vector<double> z(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = v[i];
            for (std::size_t k = 0; k < i; ++k) s -= qr_(k, i) * z[k];
            z[i] = s / qr_(i, i);
        }
        return z;
    }

private:
    Matrix qr_;
    std::vector<double> beta_;
    std::vector<double> col_norm_;
};

}  // namespace subperf

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace xact {

/// Dense row-major array of doubles with shape metadata.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    /// Rows and columns of a rank-2 tensor; a rank-1 tensor is one row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double* raw() { return data_.data(); }
    const double* raw() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    std::span<double> row(std::size_t r) { return data().subspan(r * cols(), cols()); }
    std::span<const double> row(std::size_t r) const { return data().subspan(r * cols(), cols()); }

    void fill(double v);
    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(double s);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

Tensor zeros_like(const Tensor& t);

/// Throws std::runtime_error naming `where` if any element is NaN or infinite.
/// Active only in debug builds (NDEBUG unset).
void nan_guard(const Tensor& t, const char* where);

/// Pairwise sum; splitting at the midpoint makes sum([a; a]) == 2 * sum(a) exactly.
double pairwise_sum(std::span<const double> values);

} // namespace xact

#include "xact/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace xact {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill)
{
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values))
{
    if (data_.size() != element_count(shape_)) {
        throw std::invalid_argument("Tensor: " + std::to_string(data_.size()) + " values do not fill shape of " +
                                    std::to_string(element_count(shape_)));
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
{
    return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const
{
    switch (shape_.size()) {
    case 1: return 1;
    case 2: return shape_[0];
    default: throw std::logic_error("Tensor::rows on rank " + std::to_string(shape_.size()));
    }
}

std::size_t Tensor::cols() const
{
    switch (shape_.size()) {
    case 1: return shape_[0];
    case 2: return shape_[1];
    default: throw std::logic_error("Tensor::cols on rank " + std::to_string(shape_.size()));
    }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other)
{
    if (!same_shape(other)) {
        throw std::invalid_argument("Tensor::operator+=: shape mismatch");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

Tensor& Tensor::operator*=(double s)
{
    for (auto& v : data_) {
        v *= s;
    }
    return *this;
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

void nan_guard([[maybe_unused]] const Tensor& t, [[maybe_unused]] const char* where)
{
#ifndef NDEBUG
    if (!t.all_finite()) {
        throw std::runtime_error(std::string("non-finite value after ") + where);
    }
#endif
}

double pairwise_sum(std::span<const double> values)
{
    if (values.empty()) {
        return 0.0;
    }
    if (values.size() == 1) {
        return values[0];
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

} // namespace xact

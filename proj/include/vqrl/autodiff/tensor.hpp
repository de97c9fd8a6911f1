#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqrl::ad {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Raised when a primitive receives operands of incompatible shapes.
class ShapeError : public std::invalid_argument {
public:
    ShapeError(const std::string& primitive, const Shape& lhs, const Shape& rhs);
    ShapeError(const std::string& primitive, const std::string& detail);
};

/// Dense row-major float64 array of rank 0, 1 or 2.
///
/// A Tensor is a shared handle: copies alias the same storage, the way
/// parameters are shared between a network and the optimizer that updates
/// them. Use clone() for an independent copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    /// Row vector [1 x n] built from values.
    static Tensor row(std::vector<double> values, bool requires_grad = false);

    bool defined() const noexcept { return data_ != nullptr; }

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size() const;
    /// Rows of a rank-2 tensor; 1 for rank 0 and rank 1.
    std::size_t rows() const;
    /// Last dimension; 1 for rank 0.
    std::size_t cols() const;

    std::span<const double> values() const;
    std::span<double> values();
    double item() const;
    double at(std::size_t i) const { return values()[i]; }
    double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

    bool requires_grad() const;
    void set_requires_grad(bool flag);
    /// Empty span when requires_grad is false.
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    Tensor clone() const;
    /// Same storage identity.
    bool same(const Tensor& other) const noexcept { return data_ == other.data_; }

private:
    struct Storage {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
    };

    explicit Tensor(std::shared_ptr<Storage> data) : data_(std::move(data)) {}
    const Storage& storage() const;
    Storage& storage();

    std::shared_ptr<Storage> data_;
};

}  // namespace vqrl::ad

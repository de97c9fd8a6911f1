#include "vqrl/autodiff/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace vqrl::ad {

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ShapeError::ShapeError(const std::string& primitive, const Shape& lhs, const Shape& rhs)
    : std::invalid_argument(primitive + ": shape mismatch " + shape_to_string(lhs) + " vs " +
                            shape_to_string(rhs)) {}

ShapeError::ShapeError(const std::string& primitive, const std::string& detail)
    : std::invalid_argument(primitive + ": " + detail) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_size(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.size() > 2) {
        throw ShapeError("tensor", "rank " + std::to_string(shape.size()) + " not supported");
    }
    if (shape_size(shape) != values.size()) {
        throw ShapeError("tensor", shape_to_string(shape) + " does not hold " +
                                       std::to_string(values.size()) + " values");
    }
    auto storage = std::make_shared<Storage>();
    storage->shape = std::move(shape);
    storage->values = std::move(values);
    Tensor t(std::move(storage));
    t.set_requires_grad(requires_grad);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({}, {value}, requires_grad);
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
    const std::size_t n = values.size();
    return from({1, n}, std::move(values), requires_grad);
}

const Tensor::Storage& Tensor::storage() const {
    if (!data_) {
        throw std::logic_error("access to undefined tensor");
    }
    return *data_;
}

Tensor::Storage& Tensor::storage() {
    if (!data_) {
        throw std::logic_error("access to undefined tensor");
    }
    return *data_;
}

const Shape& Tensor::shape() const { return storage().shape; }

std::size_t Tensor::size() const { return storage().values.size(); }

std::size_t Tensor::rows() const {
    const auto& s = shape();
    return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
    const auto& s = shape();
    return s.empty() ? 1 : s.back();
}

std::span<const double> Tensor::values() const { return storage().values; }

std::span<double> Tensor::values() { return storage().values; }

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item", "tensor of shape " + shape_to_string(shape()) + " is not a scalar");
    }
    return storage().values[0];
}

bool Tensor::requires_grad() const { return storage().requires_grad; }

void Tensor::set_requires_grad(bool flag) {
    auto& s = storage();
    s.requires_grad = flag;
    if (flag) {
        s.grad.assign(s.values.size(), 0.0);
    } else {
        s.grad.clear();
    }
}

std::span<const double> Tensor::grad() const { return storage().grad; }

std::span<double> Tensor::mutable_grad() { return storage().grad; }

void Tensor::zero_grad() {
    auto& g = storage().grad;
    std::fill(g.begin(), g.end(), 0.0);
}

Tensor Tensor::clone() const {
    const auto& s = storage();
    return from(s.shape, s.values, s.requires_grad);
}

}  // namespace vqrl::ad

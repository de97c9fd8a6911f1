#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "vqrl/autodiff/tensor.hpp"

namespace vqrl::ad {

enum class GradMode { Enabled, Disabled };

/// Values produced by stop_gradient calls, in call order. A finite-difference
/// probe replays them so that stopped paths stay constant under perturbation.
struct StopGradientTrace {
    std::vector<Tensor> values;
};

/// Define-by-run tape of primitive operations.
///
/// Every primitive computes its forward value immediately and, when any input
/// requires a gradient, appends a record holding the local backward rule.
/// backward() walks the tape once in reverse execution order. A Graph is meant
/// to be built, differentiated once and dropped; it is not thread-safe, but
/// independent graphs share nothing.
///
/// Broadcasting is limited to add/sub/mul with a rank-2 left operand and a
/// right operand that is a row ([1 x m] or [m]) or a scalar.
class Graph {
public:
    explicit Graph(GradMode mode = GradMode::Enabled) : mode_(mode) {}

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor scale(const Tensor& a, double factor);
    Tensor add_scalar(const Tensor& a, double offset);
    Tensor neg(const Tensor& a) { return scale(a, -1.0); }

    Tensor tanh(const Tensor& a);
    Tensor relu(const Tensor& a);
    Tensor exp(const Tensor& a);
    Tensor log(const Tensor& a);
    Tensor square(const Tensor& a);
    /// Elementwise min; ties route the gradient to a.
    Tensor minimum(const Tensor& a, const Tensor& b);
    /// Gradient passes where lo <= a <= hi.
    Tensor clamp(const Tensor& a, double lo, double hi);

    /// Reductions to a scalar.
    Tensor sum(const Tensor& a);
    Tensor mean(const Tensor& a);
    /// Subgradient goes to the first maximal entry.
    Tensor max(const Tensor& a);

    /// Reductions over the last axis: [n x m] -> [n x 1], [m] -> scalar.
    Tensor row_sum(const Tensor& a);
    Tensor softmax(const Tensor& a);
    Tensor log_softmax(const Tensor& a);
    /// Euclidean norm; subgradient 0 at the origin.
    Tensor norm_l2(const Tensor& a);
    /// Max-abs norm; subgradient to the first coordinate of maximal magnitude.
    Tensor norm_linf(const Tensor& a);

    /// out[i] = a[i, index[i]], shape [n x 1].
    Tensor gather(const Tensor& a, std::vector<std::size_t> index);
    /// Selects whole rows of a rank-2 tensor; repeated indices accumulate.
    Tensor gather_rows(const Tensor& a, std::vector<std::size_t> rows);
    /// Identity forward, zero gradient backward.
    Tensor stop_gradient(const Tensor& a);
    /// input + stop_gradient(target - input), except that the forward value
    /// is target bit-for-bit. The gradient reaches `input` unchanged and
    /// never reaches `target`.
    Tensor straight_through(const Tensor& input, const Tensor& target);
    /// Concatenates rank-2 tensors along axis 0 (rows) or 1 (columns).
    Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

    /// Accumulates d(loss)/d(t) into the grad of every requires_grad ancestor.
    void backward(const Tensor& loss);

    std::size_t recorded_ops() const noexcept { return tape_.size(); }
    bool grad_enabled() const noexcept { return mode_ == GradMode::Enabled; }

    void capture_stop_gradients(StopGradientTrace* sink) { capture_ = sink; }
    void replay_stop_gradients(const StopGradientTrace* source) {
        replay_ = source;
        replay_pos_ = 0;
    }

private:
    using BackwardFn = std::function<void(const Tensor& out, std::vector<Tensor>& inputs)>;

    struct Record {
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn backward;
    };

    Tensor finish(Tensor out, std::vector<Tensor> inputs, BackwardFn fn);
    Tensor elementwise_binary(const char* name, const Tensor& a, const Tensor& b, int op);
    Tensor unary(const Tensor& a, double (*f)(double), double (*df)(double x, double y));

    GradMode mode_;
    std::vector<Record> tape_;
    bool consumed_ = false;
    StopGradientTrace* capture_ = nullptr;
    const StopGradientTrace* replay_ = nullptr;
    std::size_t replay_pos_ = 0;
};

}  // namespace vqrl::ad

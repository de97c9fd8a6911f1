#include "vqrl/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vqrl::ad {
namespace {

enum class Broadcast { Same, Row, Scalar };

Broadcast classify(const char* name, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        return Broadcast::Same;
    }
    if (b.size() == 1 && b.rank() <= 1) {
        return Broadcast::Scalar;
    }
    const bool b_is_row = (b.rank() == 1) || (b.rank() == 2 && b.rows() == 1);
    if (a.rank() == 2 && b_is_row && b.cols() == a.cols()) {
        return Broadcast::Row;
    }
    throw ShapeError(name, a.shape(), b.shape());
}

inline std::size_t rhs_index(Broadcast mode, std::size_t i, std::size_t cols) {
    switch (mode) {
        case Broadcast::Same:
            return i;
        case Broadcast::Row:
            return i % cols;
        case Broadcast::Scalar:
            return 0;
    }
    return i;
}

// Shape of a reduction over the last axis.
Shape reduced_shape(const Tensor& a) {
    if (a.rank() == 2) {
        return {a.rows(), 1};
    }
    return {};
}

void require_rank2(const char* name, const Tensor& a) {
    if (a.rank() != 2) {
        throw ShapeError(name, "expected a rank-2 tensor, got " + shape_to_string(a.shape()));
    }
}

}  // namespace

Tensor Graph::finish(Tensor out, std::vector<Tensor> inputs, BackwardFn fn) {
    if (mode_ == GradMode::Disabled) {
        return out;
    }
    const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
    if (!needs) {
        return out;
    }
    out.set_requires_grad(true);
    tape_.push_back(Record{std::move(inputs), out, std::move(fn)});
    return out;
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw ShapeError("matmul", a.shape(), b.shape());
    }
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    const std::size_t m = b.cols();
    Tensor out = Tensor::zeros({n, m});
    auto o = out.values();
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < n; ++i) {
        double* orow = o.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            const double* brow = bv.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                orow[j] += aip * brow[j];
            }
        }
    }
    return finish(out, {a, b}, [n, k, m](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto av = in[0].values();
        const auto bv = in[1].values();
        if (in[0].requires_grad()) {
            auto ga = in[0].mutable_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double* grow = g.data() + i * m;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = bv.data() + p * m;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        acc += grow[j] * brow[j];
                    }
                    ga[i * k + p] += acc;
                }
            }
        }
        if (in[1].requires_grad()) {
            auto gb = in[1].mutable_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double* grow = g.data() + i * m;
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = av[i * k + p];
                    if (aip == 0.0) {
                        continue;
                    }
                    double* gbrow = gb.data() + p * m;
                    for (std::size_t j = 0; j < m; ++j) {
                        gbrow[j] += aip * grow[j];
                    }
                }
            }
        }
    });
}

Tensor Graph::elementwise_binary(const char* name, const Tensor& a, const Tensor& b, int op) {
    const Broadcast mode = classify(name, a, b);
    const std::size_t cols = a.cols();
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double x = av[i];
        const double y = bv[rhs_index(mode, i, cols)];
        o[i] = op == 0 ? x + y : op == 1 ? x - y : x * y;
    }
    return finish(out, {a, b}, [mode, cols, op](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto av = in[0].values();
        const auto bv = in[1].values();
        if (in[0].requires_grad()) {
            auto ga = in[0].mutable_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += op == 2 ? g[i] * bv[rhs_index(mode, i, cols)] : g[i];
            }
        }
        if (in[1].requires_grad()) {
            auto gb = in[1].mutable_grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::size_t j = rhs_index(mode, i, cols);
                gb[j] += op == 0 ? g[i] : op == 1 ? -g[i] : g[i] * av[i];
            }
        }
    });
}

Tensor Graph::add(const Tensor& a, const Tensor& b) { return elementwise_binary("add", a, b, 0); }

Tensor Graph::sub(const Tensor& a, const Tensor& b) { return elementwise_binary("sub", a, b, 1); }

Tensor Graph::mul(const Tensor& a, const Tensor& b) { return elementwise_binary("mul", a, b, 2); }

Tensor Graph::scale(const Tensor& a, double factor) {
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = av[i] * factor;
    }
    return finish(out, {a}, [factor](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * factor;
        }
    });
}

Tensor Graph::add_scalar(const Tensor& a, double offset) {
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = av[i] + offset;
    }
    return finish(out, {a}, [](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
        }
    });
}

// df receives the input x and the output y.
Tensor Graph::unary(const Tensor& a, double (*f)(double), double (*df)(double x, double y)) {
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = f(av[i]);
    }
    return finish(out, {a}, [df](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto y = res.values();
        const auto x = in[0].values();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * df(x[i], y[i]);
        }
    });
}

Tensor Graph::tanh(const Tensor& a) {
    return unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor Graph::relu(const Tensor& a) {
    return unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Graph::exp(const Tensor& a) {
    return unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor Graph::log(const Tensor& a) {
    return unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor Graph::square(const Tensor& a) {
    return unary(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor Graph::minimum(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("minimum", a.shape(), b.shape());
    }
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = av[i] <= bv[i] ? av[i] : bv[i];
    }
    return finish(out, {a, b}, [](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto av = in[0].values();
        const auto bv = in[1].values();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::size_t pick = av[i] <= bv[i] ? 0 : 1;
            if (in[pick].requires_grad()) {
                in[pick].mutable_grad()[i] += g[i];
            }
        }
    });
}

Tensor Graph::clamp(const Tensor& a, double lo, double hi) {
    if (lo > hi) {
        throw ShapeError("clamp", "lower bound exceeds upper bound");
    }
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = std::clamp(av[i], lo, hi);
    }
    return finish(out, {a}, [lo, hi](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto av = in[0].values();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (av[i] >= lo && av[i] <= hi) {
                ga[i] += g[i];
            }
        }
    });
}

Tensor Graph::sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) {
        total += v;
    }
    return finish(Tensor::scalar(total), {a}, [](const Tensor& res, std::vector<Tensor>& in) {
        const double g = res.grad()[0];
        for (double& v : in[0].mutable_grad()) {
            v += g;
        }
    });
}

Tensor Graph::mean(const Tensor& a) {
    if (a.size() == 0) {
        throw ShapeError("mean", "empty tensor");
    }
    const double n = static_cast<double>(a.size());
    double total = 0.0;
    for (double v : a.values()) {
        total += v;
    }
    return finish(Tensor::scalar(total / n), {a}, [n](const Tensor& res, std::vector<Tensor>& in) {
        const double g = res.grad()[0] / n;
        for (double& v : in[0].mutable_grad()) {
            v += g;
        }
    });
}

Tensor Graph::max(const Tensor& a) {
    if (a.size() == 0) {
        throw ShapeError("max", "empty tensor");
    }
    const auto av = a.values();
    const std::size_t arg = static_cast<std::size_t>(std::max_element(av.begin(), av.end()) - av.begin());
    return finish(Tensor::scalar(av[arg]), {a}, [arg](const Tensor& res, std::vector<Tensor>& in) {
        in[0].mutable_grad()[arg] += res.grad()[0];
    });
}

Tensor Graph::row_sum(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    Tensor out = Tensor::zeros(reduced_shape(a));
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            acc += av[i * m + j];
        }
        o[i] = acc;
    }
    return finish(out, {a}, [n, m](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                ga[i * m + j] += g[i];
            }
        }
    });
}

Tensor Graph::softmax(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = av.data() + i * m;
        double* y = o.data() + i * m;
        const double hi = *std::max_element(x, x + m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            y[j] = std::exp(x[j] - hi);
            z += y[j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            y[j] /= z;
        }
    }
    return finish(out, {a}, [n, m](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto y = res.values();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                dot += g[i * m + j] * y[i * m + j];
            }
            for (std::size_t j = 0; j < m; ++j) {
                ga[i * m + j] += y[i * m + j] * (g[i * m + j] - dot);
            }
        }
    });
}

Tensor Graph::log_softmax(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    Tensor out = Tensor::zeros(a.shape());
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = av.data() + i * m;
        double* y = o.data() + i * m;
        const double hi = *std::max_element(x, x + m);
        double z = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            z += std::exp(x[j] - hi);
        }
        const double lse = hi + std::log(z);
        for (std::size_t j = 0; j < m; ++j) {
            y[j] = x[j] - lse;
        }
    }
    return finish(out, {a}, [n, m](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto y = res.values();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < n; ++i) {
            double gsum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                gsum += g[i * m + j];
            }
            for (std::size_t j = 0; j < m; ++j) {
                ga[i * m + j] += g[i * m + j] - std::exp(y[i * m + j]) * gsum;
            }
        }
    });
}

Tensor Graph::norm_l2(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    Tensor out = Tensor::zeros(reduced_shape(a));
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            acc += av[i * m + j] * av[i * m + j];
        }
        o[i] = std::sqrt(acc);
    }
    return finish(out, {a}, [n, m](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto y = res.values();
        const auto av = in[0].values();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] == 0.0) {
                continue;
            }
            const double s = g[i] / y[i];
            for (std::size_t j = 0; j < m; ++j) {
                ga[i * m + j] += s * av[i * m + j];
            }
        }
    });
}

Tensor Graph::norm_linf(const Tensor& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    if (m == 0) {
        throw ShapeError("norm_linf", "empty last axis");
    }
    Tensor out = Tensor::zeros(reduced_shape(a));
    auto o = out.values();
    const auto av = a.values();
    std::vector<std::size_t> arg(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double v = std::fabs(av[i * m + j]);
            if (v > best) {
                best = v;
                arg[i] = j;
            }
        }
        o[i] = best;
    }
    return finish(out, {a}, [m, arg](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        const auto av = in[0].values();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < arg.size(); ++i) {
            const std::size_t idx = i * m + arg[i];
            const double sign = av[idx] > 0.0 ? 1.0 : (av[idx] < 0.0 ? -1.0 : 0.0);
            ga[idx] += g[i] * sign;
        }
    });
}

Tensor Graph::gather(const Tensor& a, std::vector<std::size_t> index) {
    require_rank2("gather", a);
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    if (index.size() != n) {
        throw ShapeError("gather", "index length " + std::to_string(index.size()) +
                                       " does not match " + shape_to_string(a.shape()));
    }
    Tensor out = Tensor::zeros({n, 1});
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        if (index[i] >= m) {
            throw ShapeError("gather", "index " + std::to_string(index[i]) + " out of range for " +
                                           shape_to_string(a.shape()));
        }
        o[i] = av[i * m + index[i]];
    }
    return finish(out, {a}, [m, index = std::move(index)](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < index.size(); ++i) {
            ga[i * m + index[i]] += g[i];
        }
    });
}

Tensor Graph::gather_rows(const Tensor& a, std::vector<std::size_t> rows) {
    require_rank2("gather_rows", a);
    const std::size_t m = a.cols();
    Tensor out = Tensor::zeros({rows.size(), m});
    auto o = out.values();
    const auto av = a.values();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= a.rows()) {
            throw ShapeError("gather_rows", "row " + std::to_string(rows[i]) + " out of range for " +
                                                shape_to_string(a.shape()));
        }
        std::copy_n(av.data() + rows[i] * m, m, o.data() + i * m);
    }
    return finish(out, {a}, [m, rows = std::move(rows)](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        auto ga = in[0].mutable_grad();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                ga[rows[i] * m + j] += g[i * m + j];
            }
        }
    });
}

Tensor Graph::stop_gradient(const Tensor& a) {
    if (replay_ != nullptr) {
        if (replay_pos_ >= replay_->values.size()) {
            throw std::logic_error("stop_gradient replay exhausted: op sequence changed");
        }
        const Tensor& frozen = replay_->values[replay_pos_++];
        if (frozen.shape() != a.shape()) {
            throw ShapeError("stop_gradient", frozen.shape(), a.shape());
        }
        return frozen.clone();
    }
    Tensor out = Tensor::from(a.shape(), std::vector<double>(a.values().begin(), a.values().end()));
    if (capture_ != nullptr) {
        capture_->values.push_back(out.clone());
    }
    return out;
}

Tensor Graph::straight_through(const Tensor& input, const Tensor& target) {
    if (input.shape() != target.shape()) {
        throw ShapeError("straight_through", input.shape(), target.shape());
    }
    const auto iv = input.values();
    const auto tv = target.values();
    std::vector<double> diff(iv.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = tv[i] - iv[i];
    }
    const Tensor offset = stop_gradient(Tensor::from(input.shape(), std::move(diff)));
    Tensor out = Tensor::zeros(input.shape());
    auto o = out.values();
    const auto ov = offset.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        // Under replay the target is frozen, so rebuild it from the live input.
        o[i] = replay_ != nullptr ? iv[i] + ov[i] : tv[i];
    }
    return finish(out, {input}, [](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        auto gi = in[0].mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            gi[i] += g[i];
        }
    });
}

Tensor Graph::concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) {
        throw ShapeError("concat", "no inputs");
    }
    if (axis > 1) {
        throw ShapeError("concat", "axis must be 0 or 1");
    }
    for (const auto& p : parts) {
        require_rank2("concat", p);
        const bool ok = axis == 0 ? p.cols() == parts[0].cols() : p.rows() == parts[0].rows();
        if (!ok) {
            throw ShapeError("concat", parts[0].shape(), p.shape());
        }
    }
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (axis == 0) {
        cols = parts[0].cols();
        for (const auto& p : parts) {
            rows += p.rows();
        }
    } else {
        rows = parts[0].rows();
        for (const auto& p : parts) {
            cols += p.cols();
        }
    }
    Tensor out = Tensor::zeros({rows, cols});
    auto o = out.values();
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const auto pv = p.values();
        if (axis == 0) {
            std::copy(pv.begin(), pv.end(), o.begin() + static_cast<std::ptrdiff_t>(offset * cols));
            offset += p.rows();
        } else {
            for (std::size_t i = 0; i < rows; ++i) {
                std::copy_n(pv.data() + i * p.cols(), p.cols(), o.data() + i * cols + offset);
            }
            offset += p.cols();
        }
    }
    return finish(out, parts, [axis, rows, cols](const Tensor& res, std::vector<Tensor>& in) {
        const auto g = res.grad();
        std::size_t offset = 0;
        for (auto& p : in) {
            const std::size_t pr = p.rows();
            const std::size_t pc = p.cols();
            if (p.requires_grad()) {
                auto gp = p.mutable_grad();
                for (std::size_t i = 0; i < pr; ++i) {
                    for (std::size_t j = 0; j < pc; ++j) {
                        const std::size_t src =
                            axis == 0 ? (offset + i) * cols + j : i * cols + offset + j;
                        gp[i * pc + j] += g[src];
                    }
                }
            }
            offset += axis == 0 ? pr : pc;
        }
        (void)rows;
    });
}

void Graph::backward(const Tensor& loss) {
    if (tape_.empty()) {
        throw std::logic_error("backward: no recorded operations");
    }
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward", "loss must be a scalar, got " +
                                         (loss.defined() ? shape_to_string(loss.shape()) : "undefined"));
    }
    if (consumed_) {
        throw std::logic_error("backward: graph already differentiated");
    }
    std::size_t end = tape_.size();
    while (end > 0 && !tape_[end - 1].output.same(loss)) {
        --end;
    }
    if (end == 0) {
        throw std::logic_error("backward: loss was not produced by this graph");
    }
    consumed_ = true;
    tape_[end - 1].output.mutable_grad()[0] += 1.0;
    for (std::size_t i = end; i-- > 0;) {
        Record& rec = tape_[i];
        rec.backward(rec.output, rec.inputs);
    }
}

}  // namespace vqrl::ad

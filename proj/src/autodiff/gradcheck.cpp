#include "vqrl/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vqrl/autodiff/adam.hpp"

namespace vqrl::ad {
namespace {

double evaluate(const LossBuilder& loss, const StopGradientTrace& trace) {
    Graph g(GradMode::Disabled);
    g.replay_stop_gradients(&trace);
    const double value = loss(g).item();
    if (!std::isfinite(value)) {
        throw std::domain_error("finite_difference_check: loss is not finite");
    }
    return value;
}

}  // namespace

GradCheckResult finite_difference_check(const LossBuilder& loss, std::vector<Tensor> params, double h) {
    if (!(h >= 1e-6 && h <= 1e-4)) {
        throw std::invalid_argument("finite_difference_check: step must lie in [1e-6, 1e-4]");
    }
    for (auto& p : params) {
        if (!p.requires_grad()) {
            p.set_requires_grad(true);
        }
    }
    zero_grads(params);

    StopGradientTrace trace;
    {
        Graph g;
        g.capture_stop_gradients(&trace);
        Tensor out = loss(g);
        if (!std::isfinite(out.item())) {
            throw std::domain_error("finite_difference_check: loss is not finite");
        }
        g.backward(out);
    }

    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto values = params[pi].values();
        const auto grad = params[pi].grad();
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double original = values[j];
            values[j] = original + h;
            const double plus = evaluate(loss, trace);
            values[j] = original - h;
            const double minus = evaluate(loss, trace);
            values[j] = original;

            const double numeric = (plus - minus) / (2.0 * h);
            const double analytic = grad[j];
            const double err = std::fabs(analytic - numeric) / std::max(1.0, std::fabs(analytic));
            if (err > result.max_relative_error || (pi == 0 && j == 0)) {
                result.max_relative_error = err;
                result.worst_param = pi;
                result.worst_index = j;
                result.worst_analytic = analytic;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace vqrl::ad

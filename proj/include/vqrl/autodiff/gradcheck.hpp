#pragma once

#include <functional>
#include <vector>

#include "vqrl/autodiff/graph.hpp"

namespace vqrl::ad {

/// Builds a scalar loss on the given graph. Must issue the same sequence of
/// stop_gradient calls on every invocation.
using LossBuilder = std::function<Tensor(Graph&)>;

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients of `loss` with central differences.
///
/// The relative error of one coordinate is
/// |analytic - numeric| / max(1, |analytic|). Stop-gradient values are frozen
/// at the unperturbed point while probing, so the numeric side differentiates
/// the same surrogate the tape does. Parameter gradients hold the analytic
/// result on return. Throws when h lies outside [1e-6, 1e-4] or the loss
/// evaluates to a non-finite value.
GradCheckResult finite_difference_check(const LossBuilder& loss, std::vector<Tensor> params,
                                        double h = 1e-5);

}  // namespace vqrl::ad

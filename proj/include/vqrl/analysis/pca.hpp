#pragma once

#include <array>
#include <span>
#include <vector>

namespace vqrl::analysis {

/// Top two principal axes of a feature set.
struct PCAModel {
    std::vector<double> mean;
    /// Unit length, mutually orthogonal; sign fixed so the entry of largest
    /// magnitude is positive.
    std::array<std::vector<double>, 2> axes;
    /// Sample-covariance eigenvalues along the axes, descending.
    std::array<double, 2> explained{0.0, 0.0};

    std::array<double, 2> project(std::span<const double> x) const;
};

/// Centres the rows and diagonalizes their D x D sample covariance. Needs
/// more than two rows, D >= 2 and non-zero total variance.
PCAModel fit_pca(const std::vector<std::vector<double>>& rows);

}  // namespace vqrl::analysis

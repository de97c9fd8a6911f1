#include "vqrl/analysis/pca.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vqrl::analysis {

std::array<double, 2> PCAModel::project(std::span<const double> x) const {
    if (x.size() != mean.size()) {
        throw std::invalid_argument("pca project: expected " + std::to_string(mean.size()) + " values, got " +
                                    std::to_string(x.size()));
    }
    std::array<double, 2> out{0.0, 0.0};
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            out[a] += (x[j] - mean[j]) * axes[a][j];
        }
    }
    return out;
}

PCAModel fit_pca(const std::vector<std::vector<double>>& rows) {
    if (rows.size() <= 2) {
        throw std::invalid_argument("fit_pca: need more than 2 rows, got " + std::to_string(rows.size()));
    }
    const std::size_t d = rows.front().size();
    if (d < 2) {
        throw std::invalid_argument("fit_pca: need at least 2 dimensions");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (r.size() != d) {
            throw std::invalid_argument("fit_pca: ragged rows");
        }
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(r[j])) {
                throw std::invalid_argument("fit_pca: non-finite value");
            }
            x(i, static_cast<Eigen::Index>(j)) = r[j];
        }
    }
    const Eigen::RowVectorXd mu = x.colwise().mean();
    x.rowwise() -= mu;
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    if (cov.trace() <= 0.0) {
        throw std::invalid_argument("fit_pca: data has zero variance");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("fit_pca: eigendecomposition failed");
    }
    // Eigen returns ascending eigenvalues.
    PCAModel model;
    model.mean.assign(mu.data(), mu.data() + d);
    const auto last = static_cast<Eigen::Index>(d) - 1;
    for (std::size_t a = 0; a < 2; ++a) {
        const Eigen::Index col = last - static_cast<Eigen::Index>(a);
        Eigen::VectorXd v = solver.eigenvectors().col(col);
        Eigen::Index big = 0;
        v.cwiseAbs().maxCoeff(&big);
        if (v(big) < 0.0) {
            v = -v;
        }
        model.axes[a].assign(v.data(), v.data() + d);
        model.explained[a] = std::max(0.0, solver.eigenvalues()(col));
    }
    return model;
}

}  // namespace vqrl::analysis

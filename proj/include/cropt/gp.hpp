#pragma once

#include "cropt/domain.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>

namespace cropt {

enum class KernelFamily { SquaredExponential, Matern52, Matern32 };

struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    std::vector<double> lengthscales; // per dimension, > 0
    double signal_variance = 1.0;     // > 0
    double noise_variance = 1e-6;     // >= 0

    void validate(std::size_t dims) const;

    // Unit-cube defaults: lengthscale 0.2 per axis.
    static KernelSpec defaults(std::size_t dims, KernelFamily family = KernelFamily::SquaredExponential);
};

// Exact GP regression with zero prior mean on standardized targets.
// Immutable once fitted; safe to query concurrently.
class GpModel {
public:
    struct Prediction {
        double mean = 0;
        double variance = 0;     // clamped at 0 from below
        double variance_raw = 0; // pre-clamp, for diagnostics
    };

    static GpModel fit(const Dataset& data, const KernelSpec& kernel, const DecisionSpace& space);
    static GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                       const KernelSpec& kernel);

    Prediction predict(std::span<const double> u) const;

    std::size_t dims() const { return static_cast<std::size_t>(inputs_.cols()); }
    std::size_t train_size() const { return static_cast<std::size_t>(inputs_.rows()); }
    const KernelSpec& kernel() const { return kernel_; }
    double jitter_used() const { return jitter_; }
    double target_mean() const { return y_mean_; }
    double target_std() const { return y_std_; }

    // Log marginal likelihood of the standardized targets under this fit.
    double log_marginal_likelihood() const;

private:
    GpModel() = default;

    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    KernelSpec kernel_;
    RowMatrix inputs_;
    Eigen::VectorXd weights_;  // (K + (noise + jitter) I)^{-1} y_std
    Eigen::MatrixXd chol_;     // lower Cholesky factor of the regularized kernel matrix
    double y_mean_ = 0;
    double y_std_ = 1;
    double jitter_ = 0;
};

double kernel_value(const KernelSpec& spec, std::span<const double> a, std::span<const double> b);

// Deterministic lengthscale refit: sweeps a small grid of isotropic
// multipliers and keeps the one with the best log marginal likelihood.
// Used by the optional refit hook; never called unless enabled.
KernelSpec refit_lengthscales(const Dataset& data, const KernelSpec& kernel, const DecisionSpace& space);

const char* to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

} // namespace cropt

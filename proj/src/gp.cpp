#include "cropt/gp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cropt {

namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;
constexpr double kStdFloor = 1e-8;
constexpr double kLog2Pi = 1.8378770664093454836;

double scaled_sq_distance(const KernelSpec& spec, const double* a, const double* b, std::size_t d) {
    double s = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const double t = (a[i] - b[i]) / spec.lengthscales[i];
        s += t * t;
    }
    return s;
}

double correlation(KernelFamily family, double sq) {
    switch (family) {
    case KernelFamily::SquaredExponential:
        return std::exp(-0.5 * sq);
    case KernelFamily::Matern52: {
        const double r = std::sqrt(5.0 * sq);
        return (1.0 + r + r * r / 3.0) * std::exp(-r);
    }
    case KernelFamily::Matern32: {
        const double r = std::sqrt(3.0 * sq);
        return (1.0 + r) * std::exp(-r);
    }
    }
    return 0;
}

} // namespace

void KernelSpec::validate(std::size_t dims) const {
    detail::require(lengthscales.size() == dims, "kernel needs one lengthscale per dimension");
    for (double l : lengthscales)
        detail::require(std::isfinite(l) && l > 0, "lengthscales must be positive");
    detail::require(std::isfinite(signal_variance) && signal_variance > 0, "signal_variance must be positive");
    detail::require(std::isfinite(noise_variance) && noise_variance >= 0, "noise_variance must be nonnegative");
}

KernelSpec KernelSpec::defaults(std::size_t dims, KernelFamily family) {
    KernelSpec k;
    k.family = family;
    k.lengthscales.assign(dims, 0.2);
    return k;
}

double kernel_value(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
    return spec.signal_variance *
           correlation(spec.family, scaled_sq_distance(spec, a.data(), b.data(), a.size()));
}

GpModel GpModel::fit(const Dataset& data, const KernelSpec& kernel, const DecisionSpace& space) {
    detail::require(!data.empty(), "cannot fit a GP on an empty dataset");
    const std::size_t n = data.size();
    Eigen::MatrixXd X(n, space.dims());
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto u = encode(data.record(i).x, space);
        for (std::size_t j = 0; j < space.dims(); ++j) X(i, j) = u[j];
        y(i) = data.record(i).y;
    }
    return fit(X, y, kernel);
}

GpModel GpModel::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                     const KernelSpec& kernel) {
    detail::require(inputs.rows() > 0, "cannot fit a GP without training points");
    detail::require(inputs.rows() == targets.size(), "inputs/targets size mismatch");
    kernel.validate(static_cast<std::size_t>(inputs.cols()));

    GpModel m;
    m.kernel_ = kernel;
    m.inputs_ = inputs; // row-major so row(i).data() is contiguous

    const auto n = inputs.rows();
    const auto d = static_cast<std::size_t>(inputs.cols());
    m.y_mean_ = targets.mean();
    const double var = (targets.array() - m.y_mean_).square().sum() / static_cast<double>(n);
    m.y_std_ = std::max(std::sqrt(var), kStdFloor);
    const Eigen::VectorXd ys = (targets.array() - m.y_mean_) / m.y_std_;

    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = kernel.signal_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double sq =
                scaled_sq_distance(kernel, m.inputs_.row(i).data(), m.inputs_.row(j).data(), d);
            K(i, j) = K(j, i) = kernel.signal_variance * correlation(kernel.family, sq);
        }
    }

    for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
        Eigen::MatrixXd Kreg = K;
        Kreg.diagonal().array() += kernel.noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(Kreg);
        if (llt.info() == Eigen::Success) {
            m.chol_ = llt.matrixL();
            m.weights_ = llt.solve(ys);
            m.jitter_ = jitter;
            return m;
        }
    }
    std::ostringstream msg;
    msg << "kernel matrix of size " << n << " not positive definite even with jitter " << kJitterMax
        << " (noise_variance " << kernel.noise_variance << "); conditioning is too poor";
    throw NumericalError(msg.str());
}

GpModel::Prediction GpModel::predict(std::span<const double> u) const {
    detail::require(u.size() == dims(), "query point has wrong dimension");
    const auto n = inputs_.rows();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sq = scaled_sq_distance(kernel_, inputs_.row(i).data(), u.data(), dims());
        kstar(i) = kernel_.signal_variance * correlation(kernel_.family, sq);
    }
    const double mean_std = kstar.dot(weights_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kstar);
    const double var_std = kernel_.signal_variance - v.squaredNorm();

    Prediction p;
    p.mean = y_mean_ + y_std_ * mean_std;
    p.variance_raw = y_std_ * y_std_ * var_std;
    p.variance = std::max(p.variance_raw, 0.0);
    return p;
}

double GpModel::log_marginal_likelihood() const {
    const auto n = inputs_.rows();
    Eigen::VectorXd ys(n);
    // reconstruct standardized targets from the stored weights: K_reg * w = ys
    Eigen::VectorXd tmp = chol_.triangularView<Eigen::Lower>().transpose() * weights_;
    ys = chol_.triangularView<Eigen::Lower>() * tmp;
    double logdet = 0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(chol_(i, i));
    return -0.5 * ys.dot(weights_) - logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
}

KernelSpec refit_lengthscales(const Dataset& data, const KernelSpec& kernel, const DecisionSpace& space) {
    static constexpr double multipliers[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    KernelSpec best = kernel;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double mult : multipliers) {
        KernelSpec candidate = kernel;
        for (double& l : candidate.lengthscales) l *= mult;
        try {
            const double lml = GpModel::fit(data, candidate, space).log_marginal_likelihood();
            if (lml > best_lml) {
                best_lml = lml;
                best = candidate;
            }
        } catch (const NumericalError&) {
            // skip multipliers that make the kernel matrix unfactorizable
        }
    }
    return best;
}

const char* to_string(KernelFamily family) {
    switch (family) {
    case KernelFamily::SquaredExponential: return "squared-exponential";
    case KernelFamily::Matern52: return "matern-5/2";
    case KernelFamily::Matern32: return "matern-3/2";
    }
    return "?";
}

KernelFamily kernel_family_from_string(const std::string& name) {
    if (name == "squared-exponential") return KernelFamily::SquaredExponential;
    if (name == "matern-5/2") return KernelFamily::Matern52;
    if (name == "matern-3/2") return KernelFamily::Matern32;
    throw DomainError("unknown kernel family '" + name + "'");
}

} // namespace cropt

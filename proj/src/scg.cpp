#include "cloudsched/scg.hpp"

#include "cloudsched/error.hpp"

#include <cmath>
#include <numeric>

namespace cloudsched {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

} // namespace

ScaledConjugateGradient::ScaledConjugateGradient(Objective objective, std::vector<double> x0,
                                                 double sigma, double lambda)
    : objective_(std::move(objective)), x_(std::move(x0)), g_(x_.size()), p_(x_.size()),
      sigma_(sigma), lambda_(lambda), scratch_x_(x_.size()), scratch_g_(x_.size())
{
    f_ = objective_(x_, g_);
    if (!std::isfinite(f_))
        throw StateError("scaled conjugate gradient: non-finite initial objective");
    for (std::size_t i = 0; i < p_.size(); ++i)
        p_[i] = -g_[i];
}

double ScaledConjugateGradient::gradient_norm() const
{
    return std::sqrt(dot(g_, g_));
}

void ScaledConjugateGradient::step()
{
    ++k_;
    const std::size_t n = x_.size();
    double p2 = dot(p_, p_);
    if (!(p2 > 0.0))
        return; // stationary point, nothing left to do

    // second-order information along p
    if (success_) {
        const double sigma_k = sigma_ / std::sqrt(p2);
        for (std::size_t i = 0; i < n; ++i)
            scratch_x_[i] = x_[i] + sigma_k * p_[i];
        objective_(scratch_x_, scratch_g_);
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            d += p_[i] * (scratch_g_[i] - g_[i]) / sigma_k;
        delta_ = d;
    }

    double delta = delta_ + (lambda_ - lambda_bar_) * p2;
    if (delta <= 0.0) {
        // force the scaled Hessian positive definite
        lambda_bar_ = 2.0 * (lambda_ - delta / p2);
        delta = -delta + lambda_ * p2;
        lambda_ = lambda_bar_;
    }

    const double mu = -dot(p_, g_);
    const double alpha = mu / delta;
    for (std::size_t i = 0; i < n; ++i)
        scratch_x_[i] = x_[i] + alpha * p_[i];
    const double f_new = objective_(scratch_x_, scratch_g_);
    if (!std::isfinite(f_new))
        throw StateError("scaled conjugate gradient: non-finite objective");

    const double comparison = 2.0 * delta * (f_ - f_new) / (mu * mu);
    if (comparison >= 0.0 && std::isfinite(comparison)) {
        const double g_old_dot_g_new = dot(g_, scratch_g_);
        x_.swap(scratch_x_);
        g_.swap(scratch_g_);
        f_ = f_new;
        lambda_bar_ = 0.0;
        success_ = true;
        if (k_ % n == 0) {
            for (std::size_t i = 0; i < n; ++i)
                p_[i] = -g_[i];
        }
        else {
            const double beta = (dot(g_, g_) - g_old_dot_g_new) / mu;
            for (std::size_t i = 0; i < n; ++i)
                p_[i] = -g_[i] + beta * p_[i];
        }
        // fall back to steepest descent if p lost the descent property
        if (dot(p_, g_) >= 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                p_[i] = -g_[i];
        }
        p2 = dot(p_, p_);
        if (comparison >= 0.75)
            lambda_ *= 0.25;
    }
    else {
        lambda_bar_ = lambda_;
        success_ = false;
    }

    if (comparison < 0.25 && p2 > 0.0)
        lambda_ += delta * (1.0 - comparison) / p2;
    if (!std::isfinite(lambda_))
        throw StateError("scaled conjugate gradient: scale parameter diverged");
}

} // namespace cloudsched

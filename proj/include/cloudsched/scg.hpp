#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cloudsched {

/// Møller's scaled conjugate gradient minimizer. Each call to step() is one
/// iteration (one training epoch for the classifier).
class ScaledConjugateGradient {
public:
    /// Returns f(x) and writes the gradient into `grad` (already sized).
    using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

    ScaledConjugateGradient(Objective objective, std::vector<double> x0, double sigma = 5e-5,
                            double lambda = 5e-7);

    void step();

    const std::vector<double>& x() const { return x_; }
    double value() const { return f_; }
    const std::vector<double>& gradient() const { return g_; }
    double gradient_norm() const;
    std::size_t iterations() const { return k_; }

private:
    Objective objective_;
    std::vector<double> x_;
    std::vector<double> g_;
    std::vector<double> p_;
    double f_ = 0.0;
    double sigma_;
    double lambda_;
    double lambda_bar_ = 0.0;
    double delta_ = 0.0;
    bool success_ = true;
    std::size_t k_ = 0;

    std::vector<double> scratch_x_;
    std::vector<double> scratch_g_;
};

} // namespace cloudsched

#pragma once
// Elementwise shrinkage operators for the L1 and L0 subproblems.
#include <cmath>

#include "errors.hpp"

namespace ssdt {

enum class HardShrinkMode {
    // Threshold sqrt(2*beta/rho): the true minimizer of b*[t!=0] + (t-x)^2/2.
    ExactProx,
    // Threshold beta/rho used directly as the cutoff.
    DirectThreshold,
};

/** Minimizer of tau*|t| + (t-x)^2/2, i.e. sgn(x)*max(|x|-tau, 0). */
inline double soft_shrink(double x, double tau) {
    if (tau < 0.0)
        throw ParameterError("soft_shrink: negative threshold");
    double m = std::fabs(x) - tau;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
}

/** Keep-or-kill operator for the L0 penalty. Ties at the threshold map to 0
 *  (both candidates attain the same objective; the sparser one is chosen). */
inline double hard_shrink(double x, double beta_over_rho, HardShrinkMode mode) {
    if (beta_over_rho < 0.0)
        throw ParameterError("hard_shrink: negative threshold parameter");
    double threshold = mode == HardShrinkMode::ExactProx
                           ? std::sqrt(2.0 * beta_over_rho)
                           : beta_over_rho;
    return std::fabs(x) <= threshold ? 0.0 : x;
}

} // namespace ssdt

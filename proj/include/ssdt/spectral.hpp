#pragma once
// Exact frequency-domain solver for screened systems
//   (w0 I + w1 A1^T A1 + w2 A2^T A2) u = rhs
// where the A_k are periodic difference stacks, so the system is circulant and
// diagonalized by the FFT. Also builds the inverse-Laplacian-weighted variant
// used by the H^-1 fidelity model.
#include <vector>

#include "diff_ops.hpp"
#include "fft.hpp"

namespace ssdt {

// Per-bin eigenvalues of the system matrix, full width x height grid,
// row-major; strictly positive so the division is always defined.
struct SpectralDenominator {
    int width = 0;
    int height = 0;
    std::vector<double> values;
};

namespace detail {

inline void check_symbol_pair(const OperatorSymbol& a, const OperatorSymbol& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError("spectral: symbol grids disagree");
    if (a.values.size() != static_cast<std::size_t>(a.width) * a.height ||
        b.values.size() != static_cast<std::size_t>(b.width) * b.height)
        throw DimensionError("spectral: symbol value count mismatch");
}

} // namespace detail

/** Denominator w0 + w1*symbol1 + w2*symbol2 per frequency bin. The difference
 *  symbols vanish at DC, so w0 > 0 is what keeps the system invertible. */
inline SpectralDenominator build_denominator(double w0, double w1, double w2,
                                             const OperatorSymbol& symbol1,
                                             const OperatorSymbol& symbol2) {
    if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0)
        throw ParameterError("build_denominator: negative weight");
    if (w0 == 0.0)
        throw SingularSystemError(
            "build_denominator: zero-frequency mode unconstrained (w0 = 0)");
    detail::check_symbol_pair(symbol1, symbol2);
    SpectralDenominator den;
    den.width = symbol1.width;
    den.height = symbol1.height;
    den.values.resize(symbol1.values.size());
    for (std::size_t i = 0; i < den.values.size(); ++i)
        den.values[i] = w0 + w1 * symbol1.values[i] + w2 * symbol2.values[i];
    return den;
}

/** Denominator lambda/l(w) + rho2*symbol1 + rho3*symbol2 with l(w) the
 *  negative-Laplacian symbol. l vanishes at DC, where the fidelity term has no
 *  say; that bin is pinned to 1 and the caller fixes the mean of the solution
 *  separately (texture is zero-mean under this fidelity). */
inline SpectralDenominator build_denominator_hinv(double lambda, double rho2,
                                                  double rho3,
                                                  const OperatorSymbol& laplacian,
                                                  const OperatorSymbol& symbol1,
                                                  const OperatorSymbol& symbol2) {
    if (!(lambda > 0.0))
        throw ParameterError("build_denominator_hinv: lambda must be positive");
    if (rho2 < 0.0 || rho3 < 0.0)
        throw ParameterError("build_denominator_hinv: negative penalty");
    detail::check_symbol_pair(symbol1, symbol2);
    detail::check_symbol_pair(laplacian, symbol1);
    SpectralDenominator den;
    den.width = symbol1.width;
    den.height = symbol1.height;
    den.values.resize(symbol1.values.size());
    for (std::size_t i = 0; i < den.values.size(); ++i) {
        double l = laplacian.values[i];
        den.values[i] = l == 0.0 ? 1.0
                                 : lambda / l + rho2 * symbol1.values[i] +
                                       rho3 * symbol2.values[i];
    }
    return den;
}

namespace detail {

// Divide the half spectrum held by the transform by the full-grid denominator.
inline void spectral_divide(fft::R2C& transform, const SpectralDenominator& den) {
    std::complex<double>* spec = transform.spectrum();
    int sw = transform.spec_width();
    for (int i = 0; i < den.height; ++i) {
        const double* drow = den.values.data() + static_cast<std::size_t>(i) * den.width;
        std::complex<double>* srow = spec + static_cast<std::size_t>(i) * sw;
        for (int j = 0; j < sw; ++j)
            srow[j] /= drow[j];
    }
}

inline void solve_with(fft::R2C& transform, const double* rhs,
                       const SpectralDenominator& den, double* out) {
    transform.forward(rhs);
    spectral_divide(transform, den);
    transform.backward(out);
}

} // namespace detail

/** Solve the circulant system by pointwise division in the frequency domain;
 *  exact up to transform rounding. */
inline ScalarField solve_screened(const ScalarField& rhs,
                                  const SpectralDenominator& den) {
    if (rhs.width() != den.width || rhs.height() != den.height)
        throw DimensionError("solve_screened: rhs/denominator shape mismatch");
    fft::R2C transform(rhs.width(), rhs.height());
    ScalarField out(rhs.width(), rhs.height());
    detail::solve_with(transform, rhs.data(), den, out.data());
    return out;
}

} // namespace ssdt

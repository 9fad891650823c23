#pragma once
// Finite-difference operator stacks with periodic wrap: forward differences,
// their exact adjoints, and the Fourier symbols of the normal operators.
//
// An order-k stack holds one plane per axis word in {x,y}^k, indexed with x
// ahead of y (order 2: xx, xy, yx, yy). Mixed words with the same letter
// multiset commute on a periodic grid and are stored as bitwise copies of one
// canonical plane.
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "image.hpp"

namespace ssdt {

struct DiffStack {
    int order = 0;
    std::vector<ScalarField> components; // 2^order planes, all same shape

    int width() const { return components.empty() ? 0 : components[0].width(); }
    int height() const { return components.empty() ? 0 : components[0].height(); }
};

// Squared transfer magnitude |A|^2 of a stacked difference operator, one value
// per frequency bin on the full width x height grid (row-major).
struct OperatorSymbol {
    int width = 0;
    int height = 0;
    std::vector<double> values;
};

namespace detail {

// out(i,j) = in(i, j+1 mod W) - in(i,j)
inline void forward_diff_x(const ScalarField& in, ScalarField& out) {
    int w = in.width(), h = in.height();
    const double* s = in.data();
    double* d = out.data();
    for (int y = 0; y < h; ++y) {
        const double* row = s + static_cast<std::size_t>(y) * w;
        double* orow = d + static_cast<std::size_t>(y) * w;
        for (int x = 0; x + 1 < w; ++x)
            orow[x] = row[x + 1] - row[x];
        orow[w - 1] = row[0] - row[w - 1];
    }
}

// out(i,j) = in(i+1 mod H, j) - in(i,j)
inline void forward_diff_y(const ScalarField& in, ScalarField& out) {
    int w = in.width(), h = in.height();
    const double* s = in.data();
    double* d = out.data();
    for (int y = 0; y < h; ++y) {
        const double* row = s + static_cast<std::size_t>(y) * w;
        const double* next = s + static_cast<std::size_t>((y + 1) % h) * w;
        double* orow = d + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            orow[x] = next[x] - row[x];
    }
}

// Adjoint of forward_diff_x: out(i,j) = in(i, j-1 mod W) - in(i,j)
inline void adjoint_diff_x(const ScalarField& in, ScalarField& out) {
    int w = in.width(), h = in.height();
    const double* s = in.data();
    double* d = out.data();
    for (int y = 0; y < h; ++y) {
        const double* row = s + static_cast<std::size_t>(y) * w;
        double* orow = d + static_cast<std::size_t>(y) * w;
        orow[0] = row[w - 1] - row[0];
        for (int x = 1; x < w; ++x)
            orow[x] = row[x - 1] - row[x];
    }
}

// Adjoint of forward_diff_y: out(i,j) = in(i-1 mod H, j) - in(i,j)
inline void adjoint_diff_y(const ScalarField& in, ScalarField& out) {
    int w = in.width(), h = in.height();
    const double* s = in.data();
    double* d = out.data();
    for (int y = 0; y < h; ++y) {
        const double* row = s + static_cast<std::size_t>(y) * w;
        const double* prev = s + static_cast<std::size_t>((y + h - 1) % h) * w;
        double* orow = d + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x)
            orow[x] = prev[x] - row[x];
    }
}

inline void check_order(int order) {
    if (order < 1 || order > 3)
        throw ParameterError("difference stacks support orders 1 to 3");
}

// Fills an existing stack without reallocating when shapes already match.
inline void diff_stack_into(const ScalarField& u, int order, DiffStack& out) {
    check_order(order);
    int n = 1 << order;
    out.order = order;
    out.components.resize(n);

    // canonical[b] applies the x-difference (order-b) times, then the
    // y-difference b times; every word with b letters y reuses it verbatim.
    ScalarField scratch(u.width(), u.height());
    std::vector<ScalarField> canonical(order + 1);
    for (int b = 0; b <= order; ++b) {
        ScalarField acc = u;
        for (int t = 0; t < order - b; ++t) {
            forward_diff_x(acc, scratch);
            std::swap(acc, scratch);
        }
        for (int t = 0; t < b; ++t) {
            forward_diff_y(acc, scratch);
            std::swap(acc, scratch);
        }
        canonical[b] = std::move(acc);
    }
    for (int idx = 0; idx < n; ++idx)
        out.components[idx] = canonical[std::popcount(static_cast<unsigned>(idx))];
}

} // namespace detail

/** Order-k stack of forward differences of u (periodic boundaries). */
inline DiffStack diff_stack(const ScalarField& u, int order) {
    DiffStack out;
    detail::diff_stack_into(u, order, out);
    return out;
}

/** Exact adjoint: returns A^T p for the stacked operator A of stack.order. */
inline ScalarField diff_adjoint(const DiffStack& stack) {
    detail::check_order(stack.order);
    int n = 1 << stack.order;
    if (static_cast<int>(stack.components.size()) != n)
        throw DimensionError("diff_adjoint: component count does not match order");
    int w = stack.width(), h = stack.height();
    for (const ScalarField& c : stack.components)
        if (c.width() != w || c.height() != h)
            throw DimensionError("diff_adjoint: mixed component shapes");

    ScalarField acc(w, h, 0.0);
    ScalarField group(w, h);
    ScalarField scratch(w, h);
    // Words sharing a letter multiset share the same adjoint chain; sum each
    // group first, then peel the applications off in reverse order.
    for (int b = 0; b <= stack.order; ++b) {
        std::fill(group.data(), group.data() + group.size(), 0.0);
        bool any = false;
        for (int idx = 0; idx < n; ++idx) {
            if (std::popcount(static_cast<unsigned>(idx)) != b)
                continue;
            const double* src = stack.components[idx].data();
            double* dst = group.data();
            for (std::size_t i = 0; i < group.size(); ++i)
                dst[i] += src[i];
            any = true;
        }
        if (!any)
            continue;
        for (int t = 0; t < b; ++t) {
            detail::adjoint_diff_y(group, scratch);
            std::swap(group, scratch);
        }
        for (int t = 0; t < stack.order - b; ++t) {
            detail::adjoint_diff_x(group, scratch);
            std::swap(group, scratch);
        }
        double* dst = acc.data();
        const double* src = group.data();
        for (std::size_t i = 0; i < acc.size(); ++i)
            dst[i] += src[i];
    }
    return acc;
}

/** Fourier symbol of A^T A for the order-k stack: per bin
 *  (|1-e^{-i wx}|^2 + |1-e^{-i wy}|^2)^k, which expands to the sum of squared
 *  transfer magnitudes over all 2^k components. Zero at the DC bin. */
inline OperatorSymbol operator_symbol(int order, int width, int height) {
    detail::check_order(order);
    if (width < 1 || height < 1)
        throw DimensionError("operator_symbol: empty frequency grid");
    OperatorSymbol sym;
    sym.width = width;
    sym.height = height;
    sym.values.resize(static_cast<std::size_t>(width) * height);
    for (int i = 0; i < height; ++i) {
        double sy = std::sin(std::numbers::pi * i / height);
        double cy = 4.0 * sy * sy;
        for (int j = 0; j < width; ++j) {
            double sx = std::sin(std::numbers::pi * j / width);
            double base = 4.0 * sx * sx + cy;
            double v = base;
            for (int t = 1; t < order; ++t)
                v *= base;
            sym.values[static_cast<std::size_t>(i) * width + j] = v;
        }
    }
    return sym;
}

} // namespace ssdt

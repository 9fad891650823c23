#pragma once
// Decomposition quality measures: structure-to-texture ratio in dB,
// structure/texture correlation coefficients, per-order nonzero counts of the
// difference stacks, and STR-targeted retuning of a single model weight.
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "decompose.hpp"
#include "diff_ops.hpp"
#include "image.hpp"

namespace ssdt {

struct MetricsReport {
    double str_db = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    std::vector<std::size_t> sparsity_profile;
    double wall_time = 0.0;
};

/** 10*log10(|u|^2 / |v|^2) over all channels jointly. */
inline double str_db(const ChannelImage& u, const ChannelImage& v) {
    if (!u.same_shape(v))
        throw DimensionError("str_db: operand shapes differ");
    double nu = 0.0, nv = 0.0;
    const double* pu = u.data();
    const double* pv = v.data();
    for (std::size_t i = 0; i < u.size(); ++i) {
        nu += pu[i] * pu[i];
        nv += pv[i] * pv[i];
    }
    if (nv == 0.0)
        throw InfiniteRatioError("str_db: texture norm is zero");
    return 10.0 * std::log10(nu / nv);
}

/** Pearson correlation of two equal-length sample vectors. */
inline double correlation(const std::vector<double>& x,
                          const std::vector<double>& y) {
    if (x.size() != y.size())
        throw DimensionError("correlation: sample counts differ");
    if (x.size() < 2)
        throw DimensionError("correlation: need at least two samples");
    // A constant vector whose value is not exactly representable leaves
    // roundoff crumbs in the centered sums, so catch constancy directly.
    auto constant = [](const std::vector<double>& s) {
        for (std::size_t i = 1; i < s.size(); ++i)
            if (s[i] != s[0]) return false;
        return true;
    };
    if (constant(x) || constant(y))
        throw DegenerateInputError("correlation: zero variance argument");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInputError("correlation: zero variance argument");
    return sxy / std::sqrt(sxx * syy);
}

struct CorrelationPair {
    double c0 = 0.0; // corr(u, v), averaged over usable channels
    double c1 = 0.0; // corr(|grad u|, |v|), averaged over usable channels
    int skipped_c0 = 0;
    int skipped_c1 = 0;
};

/** Channel-averaged structure/texture correlations. Channels whose operands
 *  have zero variance are excluded from the respective average; if every
 *  channel is excluded for one of the measures, throws DegenerateInputError. */
inline CorrelationPair structure_texture_correlations(const ChannelImage& u,
                                                      const ChannelImage& v) {
    if (!u.same_shape(v))
        throw DimensionError("correlations: operand shapes differ");
    CorrelationPair out;
    double sum0 = 0.0, sum1 = 0.0;
    int used0 = 0, used1 = 0;
    std::size_t n = u.plane_size();
    std::vector<double> a(n), b(n);
    for (int c = 0; c < u.channels(); ++c) {
        const double* pu = u.plane(c);
        const double* pv = v.plane(c);
        a.assign(pu, pu + n);
        b.assign(pv, pv + n);
        try {
            sum0 += correlation(a, b);
            ++used0;
        } catch (const DegenerateInputError&) {
            ++out.skipped_c0;
        }
        DiffStack d1 = diff_stack(u.channel(c), 1);
        const double* dx = d1.components[0].data();
        const double* dy = d1.components[1].data();
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = std::hypot(dx[i], dy[i]);
            b[i] = std::fabs(pv[i]);
        }
        try {
            sum1 += correlation(a, b);
            ++used1;
        } catch (const DegenerateInputError&) {
            ++out.skipped_c1;
        }
    }
    if (used0 == 0 || used1 == 0)
        throw DegenerateInputError("correlations: every channel is constant");
    out.c0 = sum0 / used0;
    out.c1 = sum1 / used1;
    return out;
}

/** For each order k = 1..max_order, the number of difference-stack entries of
 *  magnitude above tau0, summed over channels. */
inline std::vector<std::size_t> sparsity_profile(const ChannelImage& u,
                                                 int max_order,
                                                 double tau0 = 1e-6) {
    if (max_order < 1 || max_order > 3)
        throw ParameterError("sparsity_profile: max_order must be 1..3");
    if (!(tau0 >= 0.0))
        throw ParameterError("sparsity_profile: tau0 must be nonnegative");
    std::vector<std::size_t> counts(static_cast<std::size_t>(max_order), 0);
    for (int k = 1; k <= max_order; ++k) {
        for (int c = 0; c < u.channels(); ++c) {
            DiffStack s = diff_stack(u.channel(c), k);
            for (const ScalarField& comp : s.components) {
                const double* p = comp.data();
                for (std::size_t i = 0; i < comp.size(); ++i)
                    if (std::fabs(p[i]) > tau0)
                        ++counts[k - 1];
            }
        }
    }
    return counts;
}

enum class TunableWeight { Lambda, Alpha, Beta, Gamma };

inline const char* tunable_weight_name(TunableWeight w) {
    switch (w) {
    case TunableWeight::Lambda: return "lambda";
    case TunableWeight::Alpha: return "alpha";
    case TunableWeight::Beta: return "beta";
    case TunableWeight::Gamma: return "gamma";
    }
    return "lambda";
}

inline TunableWeight parse_tunable_weight(const std::string& name) {
    if (name == "lambda") return TunableWeight::Lambda;
    if (name == "alpha") return TunableWeight::Alpha;
    if (name == "beta") return TunableWeight::Beta;
    if (name == "gamma") return TunableWeight::Gamma;
    throw ParameterError("unknown tunable weight '" + name + "'");
}

class TuningError : public Error {
public:
    TuningError(const std::string& what, DecomposeConfig best, double best_str)
        : Error(what), best_config(std::move(best)), best_str_db(best_str) {}

    DecomposeConfig best_config;
    double best_str_db = 0.0;
};

namespace detail {

inline double get_tunable(const DecomposeConfig& cfg, TunableWeight w) {
    switch (w) {
    case TunableWeight::Lambda: return cfg.lambda;
    case TunableWeight::Alpha: return cfg.alpha;
    case TunableWeight::Beta: return cfg.beta;
    case TunableWeight::Gamma: return cfg.gamma.value();
    }
    return cfg.lambda;
}

inline void set_tunable(DecomposeConfig& cfg, TunableWeight w, double v) {
    switch (w) {
    case TunableWeight::Lambda: cfg.lambda = v; break;
    case TunableWeight::Alpha: cfg.alpha = v; break;
    case TunableWeight::Beta: cfg.beta = v; break;
    case TunableWeight::Gamma: cfg.gamma = v; break;
    }
}

} // namespace detail

/** Retune one weight of cfg by log-scale bisection over [1e-5, 10] until the
 *  decomposition's STR is within 0.1 dB of target, spending at most 30
 *  decompositions. The first probe runs cfg unchanged, so an already-matching
 *  config comes back after a single decomposition. Throws TuningError (with
 *  the best config found) when the target is outside the bracket's response
 *  range or the probe budget runs out. */
inline DecomposeConfig match_str(const ChannelImage& f, double target,
                                 const DecomposeConfig& cfg,
                                 TunableWeight tunable,
                                 int* probes_out = nullptr) {
    validate_config(cfg);
    if (tunable == TunableWeight::Gamma && cfg.model != Model::Gp)
        throw ParameterError("match_str: gamma is only tunable for the gp model");

    constexpr double kLo = 1e-5;
    constexpr double kHi = 10.0;
    constexpr double kTolDb = 0.1;
    constexpr int kMaxProbes = 30;

    int probes = 0;
    DecomposeConfig best = cfg;
    double best_err = std::numeric_limits<double>::infinity();
    double best_str = std::numeric_limits<double>::quiet_NaN();
    auto probe = [&](double value) {
        DecomposeConfig c = cfg;
        detail::set_tunable(c, tunable, value);
        ++probes;
        DecompositionResult r = decompose(f, c);
        double s;
        try {
            s = str_db(r.structure, r.texture);
        } catch (const InfiniteRatioError&) {
            s = std::numeric_limits<double>::infinity();
        }
        double err = std::fabs(s - target);
        if (err < best_err) {
            best_err = err;
            best = c;
            best_str = s;
        }
        return s;
    };
    auto matched = [&](double s) { return std::fabs(s - target) <= kTolDb; };
    auto finish = [&]() {
        if (probes_out)
            *probes_out = probes;
        return best;
    };

    if (matched(probe(detail::get_tunable(cfg, tunable))))
        return finish();

    double lo = kLo, hi = kHi;
    double slo = probe(lo);
    if (matched(slo))
        return finish();
    double shi = probe(hi);
    if (matched(shi))
        return finish();

    bool increasing = shi > slo;
    if (target < std::min(slo, shi) || target > std::max(slo, shi)) {
        if (probes_out)
            *probes_out = probes;
        throw TuningError("match_str: target outside the response range of the "
                          "weight bracket",
                          best, best_str);
    }
    while (probes < kMaxProbes) {
        double mid = std::exp(0.5 * (std::log(lo) + std::log(hi)));
        double sm = probe(mid);
        if (matched(sm))
            return finish();
        if ((sm < target) == increasing)
            lo = mid;
        else
            hi = mid;
    }
    if (probes_out)
        *probes_out = probes;
    throw TuningError("match_str: probe budget exhausted", best, best_str);
}

} // namespace ssdt

#pragma once

#include <memory>
#include <stdexcept>

namespace mechnum {

/// Physical-layer mapping from an allocated resource amount to a
/// performance metric. Three shapes are supported:
///   identity           b(x) = x
///   rate               b(x) = log2(1 + gain*x / noise_plus_interf)   [bit/s/Hz]
///   energy_efficiency  b(x) = rate(x) / (circuit_power + x)          [bit/s/Hz/W]
/// Rate is strictly increasing and strictly concave; energy efficiency is
/// unimodal with a single interior or boundary peak.
class ObjectiveFn {
public:
    enum class Kind { identity, rate, energy_efficiency };

    static ObjectiveFn identity();
    static ObjectiveFn rate(double gain, double noise_plus_interf);
    static ObjectiveFn energy_efficiency(double gain, double noise_plus_interf,
                                         double circuit_power);

    Kind kind() const { return kind_; }
    bool unimodal() const { return kind_ == Kind::energy_efficiency; }

    /// Metric achieved at resource x. Throws std::domain_error for x < 0.
    double value(double x) const;

    /// Analytic derivative of value().
    double deriv(double x) const;

    /// Maximizer of the metric on [0, hi] (golden-section, relative
    /// tolerance 1e-8). Only meaningful for unimodal kinds; throws
    /// std::invalid_argument otherwise.
    double peak(double hi) const;

    double gain() const { return gain_; }
    double noise_plus_interf() const { return noise_plus_interf_; }
    double circuit_power() const { return circuit_power_; }

private:
    ObjectiveFn(Kind k, double g, double npi, double p0)
        : kind_(k), gain_(g), noise_plus_interf_(npi), circuit_power_(p0) {}

    Kind kind_;
    double gain_ = 0.0;
    double noise_plus_interf_ = 0.0;
    double circuit_power_ = 0.0;
};

/// A user's private worth of an achieved metric b. Concave, nondecreasing,
/// and zero at zero in every supported shape:
///   exponential  v(b) = 1 - exp(-eps*b)
///   scaled       v(b) = alpha * inner(b),  alpha in (0,1)
///   affine       v(b) = weight * b         (weighted-sum special case)
class ValuationFn {
public:
    enum class Kind { exponential, scaled, affine };

    static ValuationFn exponential(double eps);
    static ValuationFn scaled(double alpha, ValuationFn inner);
    static ValuationFn affine(double weight);

    Kind kind() const { return kind_; }

    /// Worth of metric b. Throws std::domain_error for b < 0.
    double value(double b) const;

    /// Analytic derivative of value().
    double deriv(double b) const;

    /// True when the family is strictly concave (exponential, possibly
    /// scaled). Affine is concave but not strictly.
    bool strictly_concave() const;

    /// When this valuation is an exponential up to a positive scale
    /// (exponential, or any nesting of scaled around exponential), fills
    /// scale and eps so that v(b) = scale * (1 - exp(-eps*b)) and returns
    /// true. Used for closed-form best responses and parameter misreports.
    bool exponential_core(double* scale, double* eps) const;

    double param() const { return param_; }          // eps, alpha, or weight
    const ValuationFn& inner() const;                // scaled only

private:
    ValuationFn(Kind k, double p) : kind_(k), param_(p) {}

    Kind kind_;
    double param_;
    std::shared_ptr<const ValuationFn> inner_;
};

/// Utility of a resource amount: u(x) = v(b(x)) restricted to the range
/// where it is nondecreasing. For unimodal objectives the domain is capped
/// at the objective's peak; evaluation past the cap clamps and reports it
/// so callers (solvers, sweeps) stay total.
class ComposedUtility {
public:
    ComposedUtility(ValuationFn valuation, ObjectiveFn objective, double x_max);

    struct Eval {
        double value;
        bool clamped;   // true when x exceeded domain_hi and was clamped
    };

    Eval eval(double x) const;
    double value(double x) const { return eval(x).value; }

    /// Chain-rule derivative v'(b(x)) * b'(x). Throws std::domain_error
    /// outside [0, domain_hi].
    double deriv(double x) const;

    double domain_hi() const { return domain_hi_; }
    double x_max() const { return x_max_; }
    const ValuationFn& valuation() const { return valuation_; }
    const ObjectiveFn& objective() const { return objective_; }

    /// Same valuation and objective with a replaced valuation (used by
    /// reporting strategies).
    ComposedUtility with_valuation(ValuationFn v) const {
        return ComposedUtility(std::move(v), objective_, x_max_);
    }

private:
    ValuationFn valuation_;
    ObjectiveFn objective_;
    double x_max_;
    double domain_hi_;
};

} // namespace mechnum

#include "mechnum/valuation.hpp"

#include "mechnum/numeric.hpp"

#include <cmath>

namespace mechnum {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

ObjectiveFn ObjectiveFn::identity() {
    return ObjectiveFn(Kind::identity, 0.0, 0.0, 0.0);
}

ObjectiveFn ObjectiveFn::rate(double gain, double noise_plus_interf) {
    if (gain <= 0.0 || noise_plus_interf <= 0.0)
        throw std::invalid_argument("rate objective needs gain > 0 and noise_plus_interf > 0");
    return ObjectiveFn(Kind::rate, gain, noise_plus_interf, 0.0);
}

ObjectiveFn ObjectiveFn::energy_efficiency(double gain, double noise_plus_interf,
                                           double circuit_power) {
    if (gain <= 0.0 || noise_plus_interf <= 0.0 || circuit_power <= 0.0)
        throw std::invalid_argument(
            "energy_efficiency objective needs gain, noise_plus_interf, circuit_power > 0");
    return ObjectiveFn(Kind::energy_efficiency, gain, noise_plus_interf, circuit_power);
}

double ObjectiveFn::value(double x) const {
    if (x < 0.0) throw std::domain_error("objective evaluated at negative resource");
    switch (kind_) {
    case Kind::identity:
        return x;
    case Kind::rate:
        return std::log2(1.0 + gain_ * x / noise_plus_interf_);
    case Kind::energy_efficiency:
        return std::log2(1.0 + gain_ * x / noise_plus_interf_) / (circuit_power_ + x);
    }
    return 0.0;
}

double ObjectiveFn::deriv(double x) const {
    if (x < 0.0) throw std::domain_error("objective derivative at negative resource");
    switch (kind_) {
    case Kind::identity:
        return 1.0;
    case Kind::rate:
        return gain_ / ((noise_plus_interf_ + gain_ * x) * kLn2);
    case Kind::energy_efficiency: {
        const double r = std::log2(1.0 + gain_ * x / noise_plus_interf_);
        const double rp = gain_ / ((noise_plus_interf_ + gain_ * x) * kLn2);
        const double denom = circuit_power_ + x;
        return (rp * denom - r) / (denom * denom);
    }
    }
    return 0.0;
}

double ObjectiveFn::peak(double hi) const {
    if (!unimodal())
        throw std::invalid_argument("peak() is only defined for unimodal objectives");
    if (hi <= 0.0) throw std::invalid_argument("peak() needs a positive upper bound");
    return golden_section_max([this](double x) { return value(x); }, 0.0, hi, 1e-8);
}

ValuationFn ValuationFn::exponential(double eps) {
    if (eps <= 0.0) throw std::invalid_argument("exponential valuation needs eps > 0");
    return ValuationFn(Kind::exponential, eps);
}

ValuationFn ValuationFn::scaled(double alpha, ValuationFn inner) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("scaled valuation needs alpha in (0,1)");
    ValuationFn v(Kind::scaled, alpha);
    v.inner_ = std::make_shared<const ValuationFn>(std::move(inner));
    return v;
}

ValuationFn ValuationFn::affine(double weight) {
    if (weight <= 0.0) throw std::invalid_argument("affine valuation needs weight > 0");
    return ValuationFn(Kind::affine, weight);
}

double ValuationFn::value(double b) const {
    if (b < 0.0) throw std::domain_error("valuation evaluated at negative metric");
    switch (kind_) {
    case Kind::exponential:
        return -std::expm1(-param_ * b);
    case Kind::scaled:
        return param_ * inner_->value(b);
    case Kind::affine:
        return param_ * b;
    }
    return 0.0;
}

double ValuationFn::deriv(double b) const {
    if (b < 0.0) throw std::domain_error("valuation derivative at negative metric");
    switch (kind_) {
    case Kind::exponential:
        return param_ * std::exp(-param_ * b);
    case Kind::scaled:
        return param_ * inner_->deriv(b);
    case Kind::affine:
        return param_;
    }
    return 0.0;
}

bool ValuationFn::strictly_concave() const {
    switch (kind_) {
    case Kind::exponential:
        return true;
    case Kind::scaled:
        return inner_->strictly_concave();
    case Kind::affine:
        return false;
    }
    return false;
}

bool ValuationFn::exponential_core(double* scale, double* eps) const {
    double s = 1.0;
    const ValuationFn* v = this;
    while (v->kind_ == Kind::scaled) {
        s *= v->param_;
        v = v->inner_.get();
    }
    if (v->kind_ != Kind::exponential) return false;
    if (scale) *scale = s;
    if (eps) *eps = v->param_;
    return true;
}

const ValuationFn& ValuationFn::inner() const {
    if (kind_ != Kind::scaled)
        throw std::invalid_argument("inner() is only defined for scaled valuations");
    return *inner_;
}

ComposedUtility::ComposedUtility(ValuationFn valuation, ObjectiveFn objective, double x_max)
    : valuation_(std::move(valuation)), objective_(std::move(objective)), x_max_(x_max) {
    if (x_max <= 0.0) throw std::invalid_argument("composed utility needs x_max > 0");
    domain_hi_ = objective_.unimodal() ? std::min(x_max, objective_.peak(x_max)) : x_max;
}

ComposedUtility::Eval ComposedUtility::eval(double x) const {
    if (x < 0.0) throw std::domain_error("utility evaluated at negative resource");
    if (x > domain_hi_) return {valuation_.value(objective_.value(domain_hi_)), true};
    return {valuation_.value(objective_.value(x)), false};
}

double ComposedUtility::deriv(double x) const {
    if (x < 0.0 || x > domain_hi_ * (1.0 + 1e-12))
        throw std::domain_error("utility derivative outside [0, domain_hi]");
    x = std::min(x, domain_hi_);
    return valuation_.deriv(objective_.value(x)) * objective_.deriv(x);
}

} // namespace mechnum

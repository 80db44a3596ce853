#include "zeroloss/activations.hpp"

#include <cmath>
#include <sstream>

#include "zeroloss/errors.hpp"

namespace zeroloss {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_inverse(double y) {
    // log(e^y - 1) = y + log(1 - e^{-y})
    return y + std::log(-std::expm1(-y));
}

double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Activation Activation::mollified_relu(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
        throw Error(ErrorKind::ValidationError, "mollified_relu: eps must be positive and finite");
    }
    return Activation(ActivationKind::MollifiedRelu, eps);
}

Activation Activation::from_name(const std::string& name, double eps) {
    if (name == "identity") return identity();
    if (name == "relu") return relu();
    if (name == "softplus") return softplus();
    if (name == "tanh") return tanh();
    if (name == "mollified_relu") return mollified_relu(eps);
    throw Error(ErrorKind::ValidationError, "unknown activation '" + name + "'");
}

std::string Activation::name() const {
    switch (kind_) {
        case ActivationKind::Identity: return "identity";
        case ActivationKind::Relu: return "relu";
        case ActivationKind::MollifiedRelu: return "mollified_relu";
        case ActivationKind::Softplus: return "softplus";
        case ActivationKind::Tanh: return "tanh";
    }
    return "unknown";
}

ActivationFlags Activation::flags() const {
    switch (kind_) {
        case ActivationKind::Identity: return {false, true, true};
        case ActivationKind::Relu: return {false, false, false};
        case ActivationKind::MollifiedRelu:
        case ActivationKind::Softplus: return {true, true, true};
        case ActivationKind::Tanh: return {false, true, true};
    }
    return {};
}

double Activation::eval(double x) const {
    switch (kind_) {
        case ActivationKind::Identity: return x;
        case ActivationKind::Relu: return x > 0.0 ? x : 0.0;
        case ActivationKind::MollifiedRelu: return eps_ * zeroloss::softplus(x / eps_);
        case ActivationKind::Softplus: return zeroloss::softplus(x);
        case ActivationKind::Tanh: return std::tanh(x);
    }
    return x;
}

double Activation::deriv(double x) const {
    switch (kind_) {
        case ActivationKind::Identity: return 1.0;
        case ActivationKind::Relu: return x > 0.0 ? 1.0 : 0.0;
        case ActivationKind::MollifiedRelu: return logistic(x / eps_);
        case ActivationKind::Softplus: return logistic(x);
        case ActivationKind::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

double Activation::log_deriv(double x) const {
    switch (kind_) {
        case ActivationKind::Identity: return 0.0;
        case ActivationKind::Relu: return x > 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
        // log logistic(u) = -softplus(-u)
        case ActivationKind::MollifiedRelu: return -zeroloss::softplus(-x / eps_);
        case ActivationKind::Softplus: return -zeroloss::softplus(-x);
        case ActivationKind::Tanh: {
            // 1 - tanh^2 = 4 / (e^{x} + e^{-x})^2
            const double ax = std::abs(x);
            return std::log(4.0) - 2.0 * (ax + std::log1p(std::exp(-2.0 * ax)));
        }
    }
    return 0.0;
}

Interval Activation::inverse_domain() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
        case ActivationKind::Identity: return {-inf, inf};
        case ActivationKind::Relu: return {0.0, 0.0};
        case ActivationKind::MollifiedRelu:
        case ActivationKind::Softplus: return {0.0, inf};
        case ActivationKind::Tanh: return {-1.0, 1.0};
    }
    return {};
}

double Activation::inverse(double y) const {
    switch (kind_) {
        case ActivationKind::Identity: return y;
        case ActivationKind::Relu: break;
        case ActivationKind::MollifiedRelu: return eps_ * softplus_inverse(y / eps_);
        case ActivationKind::Softplus: return softplus_inverse(y);
        case ActivationKind::Tanh: return std::atanh(y);
    }
    throw Error(ErrorKind::NotLocalDiffeo, "activation '" + name() + "' has no inverse");
}

Matrix Activation::apply(const Matrix& a) const {
    return a.unaryExpr([this](double x) { return eval(x); });
}

Matrix Activation::apply_deriv(const Matrix& a) const {
    return a.unaryExpr([this](double x) { return deriv(x); });
}

Matrix Activation::apply_inverse(const Matrix& a) const {
    if (!has_inverse()) {
        throw Error(ErrorKind::NotLocalDiffeo, "activation '" + name() + "' has no inverse");
    }
    const Interval dom = inverse_domain();
    Matrix out(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double y = a(i, j);
            if (!dom.contains(y)) {
                std::ostringstream msg;
                msg.precision(17);
                msg << name() << " inverse: entry (" << i << ", " << j << ") = " << y
                    << " outside (" << dom.lo << ", " << dom.hi << ")";
                throw DomainError(static_cast<std::size_t>(i), static_cast<std::size_t>(j), y, msg.str());
            }
            out(i, j) = inverse(y);
        }
    }
    return out;
}

LocalDiffeoPoint local_diffeo_point(const Activation& act, std::size_t dim) {
    if (!act.flags().is_local_diffeo) {
        throw Error(ErrorKind::NotLocalDiffeo,
                    "activation '" + act.name() + "' is not a local diffeomorphism usable for pullback");
    }
    double lo = 0.0;
    double hi = 0.0;
    switch (act.kind()) {
        case ActivationKind::Tanh: {
            const Interval range = act.inverse_domain();
            const double center = 0.5 * (range.lo + range.hi);
            const double half = 0.9 * 0.5 * (range.hi - range.lo);
            lo = center - half;
            hi = center + half;
            break;
        }
        case ActivationKind::Softplus:
            lo = 0.1;
            hi = 2.0;
            break;
        case ActivationKind::MollifiedRelu:
            lo = 0.1 * act.eps();
            hi = 2.0 * act.eps();
            break;
        case ActivationKind::Identity:
            lo = -1.0;
            hi = 1.0;
            break;
        case ActivationKind::Relu: break;
    }
    const auto n = static_cast<Eigen::Index>(dim);
    return {Vector::Zero(n), Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

}  // namespace zeroloss

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "zeroloss/linalg.hpp"

namespace zeroloss {

enum class ActivationKind { Identity, Relu, MollifiedRelu, Softplus, Tanh };

// Open interval (lo, hi); infinite endpoints allowed.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double v) const { return v > lo && v < hi; }
};

struct ActivationFlags {
    bool is_diffeo_to_positive = false;  // R -> (0, inf) diffeomorphism
    bool is_local_diffeo = false;        // invertible with nonzero derivative somewhere
    bool has_lipschitz_deriv = false;
};

// Scalar activation sigma: R -> I, applied componentwise to matrices.
//
// mollified_relu(eps) is eps * softplus(x / eps): strictly increasing onto
// (0, inf), below eps * ln 2 for x < 0, and sigma'(x) = logistic(x / eps)
// decays to zero as x -> -inf.
class Activation {
public:
    static Activation identity() { return Activation(ActivationKind::Identity, 0.0); }
    static Activation relu() { return Activation(ActivationKind::Relu, 0.0); }
    static Activation softplus() { return Activation(ActivationKind::Softplus, 0.0); }
    static Activation tanh() { return Activation(ActivationKind::Tanh, 0.0); }
    static Activation mollified_relu(double eps = 0.01);

    // Accepts "identity", "relu", "softplus", "tanh", "mollified_relu".
    // eps is only used by mollified_relu. Throws ValidationError.
    static Activation from_name(const std::string& name, double eps = 0.01);

    ActivationKind kind() const { return kind_; }
    double eps() const { return eps_; }
    std::string name() const;
    ActivationFlags flags() const;

    double eval(double x) const;
    // For relu the derivative at 0 is taken to be 0.
    double deriv(double x) const;
    // log(sigma'(x)); finite where deriv underflows. -inf where sigma' == 0.
    double log_deriv(double x) const;

    bool has_inverse() const { return kind_ != ActivationKind::Relu; }
    // The open range of sigma, which is the domain of its inverse.
    Interval inverse_domain() const;
    // Caller must ensure inverse_domain().contains(y).
    double inverse(double y) const;

    Matrix apply(const Matrix& a) const;
    Matrix apply_deriv(const Matrix& a) const;
    // Throws DomainError naming the first offending entry.
    Matrix apply_inverse(const Matrix& a) const;

private:
    Activation(ActivationKind kind, double eps) : kind_(kind), eps_(eps) {}

    ActivationKind kind_;
    double eps_;
};

// A point z with sigma'(z_j) != 0 and an open box R = prod (lo_j, hi_j)
// around sigma(z) on which the componentwise inverse is smooth.
struct LocalDiffeoPoint {
    Vector z;
    Vector box_lo;
    Vector box_hi;
};

// Bounded ranges are shrunk by 10% of the half-width per side (tanh gives
// (-0.9, 0.9)); unbounded ranges use a fixed box around sigma(0).
// Throws NotLocalDiffeo for relu.
LocalDiffeoPoint local_diffeo_point(const Activation& act, std::size_t dim);

// Numerically stable scalar helpers, shared with tests.
double softplus(double x);
double softplus_inverse(double y);
double logistic(double x);

}  // namespace zeroloss

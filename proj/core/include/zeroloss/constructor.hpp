#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zeroloss/activations.hpp"
#include "zeroloss/jacobian.hpp"
#include "zeroloss/linalg.hpp"
#include "zeroloss/network.hpp"

namespace zeroloss {

enum class ConstructionMethod { Linear, GeneralPullback, PositiveSector };

const char* to_string(ConstructionMethod method);

// Explicit zero-loss parameters together with the intermediate targets that
// produced them.
//
// For GeneralPullback, intermediates[l] is the pre-activation target S^(l+1)
// (l = 0..L). For PositiveSector it is the hidden output X^(l) (l = 0..L,
// intermediates[0] = X^(0)). lambda_values holds the translation scalar used
// for each translated layer, output layer first.
struct ConstructionRecord {
    NetworkSpec spec;
    NetworkParams params;
    ConstructionMethod method = ConstructionMethod::Linear;
    std::vector<Matrix> intermediates;
    std::vector<double> lambda_values;
    double achieved_cost = 0.0;
    std::uint64_t output_weight_seed = 0;  // seed actually used for W_{L+1}
};

// Solves W X^(0) + b u^T = target for W (b fixed), giving
// W = (target - b u^T) ((X^(0))^T X^(0))^{-1} (X^(0))^T. Throws RankDeficient.
Matrix solve_input_layer(const Matrix& x0, const Matrix& target, const Vector& b);

// L = 0 network fitting Y_omega exactly; b1 defaults to zero.
ConstructionRecord construct_linear(const TrainingSet& ts, const std::optional<Vector>& b1 = std::nullopt);

struct PullbackStep {
    Matrix w;       // diagonal, invertible
    Vector b;
    Matrix s_prev;  // W sigma(S_prev) + b u^T = S_next
};

// Maps the bounding box of the columns of s_next onto the invertibility box of
// the activation by an invertible diagonal affine map, then pulls each column
// back through it and sigma^{-1}. A coordinate with zero spread gets a unit
// box. Throws NotLocalDiffeo or NumericalFailure (round trip above 1e-9).
PullbackStep pullback_layer(const Activation& act, const Matrix& s_next);

// Layer-by-layer pullback of the zero-padded labels followed by a linear
// regression on the input layer. Requires M_0 = M_1 = ... = M_L = M > N and
// Q <= M.
ConstructionRecord construct_general(const NetworkSpec& spec, const TrainingSet& ts);

struct PositiveSectorOptions {
    // W_2..W_L; when empty they are drawn as seeded random orthogonal matrices.
    std::vector<Matrix> interior_weights;
    std::uint64_t interior_seed = 0;
    std::uint64_t output_weight_seed = 0;
    // lambda = max(0, -min untranslated entry) + margin at every layer. A
    // non-positive margin voids the positivity guarantee.
    double lambda_margin = 1.0;
};

// Construction for activations that are diffeomorphisms onto (0, inf): pick
// an entrywise positive W_{L+1}, translate every layer into the positive
// sector with its bias, recurse through the given W_l^{-1}, and solve the
// first layer with b_1 = 0. DomainError from sigma^{-1} is propagated.
ConstructionRecord construct_positive_sector(const NetworkSpec& spec, const TrainingSet& ts,
                                             const PositiveSectorOptions& options = {});

// Seeded Haar-random orthogonal matrix (QR of a Gaussian draw).
Matrix random_orthogonal(std::size_t n, std::uint64_t seed);

// Zero-loss certificate: forward cost and max |W_{L+1} X^(L) + B_{L+1} - Y|.
struct ZeroLossCheck {
    double cost = 0.0;
    double max_abs_residual = 0.0;
};

ZeroLossCheck verify_zero_loss(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts);

// sigma(z) = sum_i phi(|z - c_i| / r) * <g_i, z - c_i> with the smooth bump
// phi(s) = exp(1 - 1/(1 - s^2)) on [0, 1). phi(0) = 1 and phi'(0) = 0, and the
// supports are disjoint, so grad sigma(c_i) = g_i exactly.
class BumpSumField final : public ScalarField {
public:
    BumpSumField(Matrix centers, Matrix gradients, double radius);

    std::size_t dim() const override { return static_cast<std::size_t>(centers_.cols()); }
    double value(const Vector& z) const override;
    Vector gradient(const Vector& z) const override;

    double radius() const { return radius_; }
    const Matrix& centers() const { return centers_; }

private:
    Matrix centers_;    // N x M, one center per row
    Matrix gradients_;  // N x M
    double radius_;
};

// Builds a map whose gradient at row i of ax equals row i of g. The bump radius
// is 0.45 times the smallest pairwise row distance (1 for a single row).
// Throws DuplicateCenters when two rows coincide.
BumpSumField build_gradient_matching_activation(const Matrix& ax, const Matrix& g);

}  // namespace zeroloss

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "zeroloss/activations.hpp"
#include "zeroloss/linalg.hpp"
#include "zeroloss/network.hpp"

namespace zeroloss {

// Row (j * Q + q) of D is the derivative of output coordinate q on sample j;
// columns follow the canonical flatten() order.
inline constexpr const char* kJacobianLayout =
    "rows: sample-major (row = j*Q + q); cols: theta order, per layer W row-major then b";

struct JacobianReport {
    Matrix d;
    RankResult rank;
    std::size_t samples = 0;
    std::size_t outputs = 0;
    std::size_t parameters = 0;

    // Full rank in the sense min(QN, K).
    bool full_rank() const { return rank.full_rank(); }
};

// Reverse accumulation over a forward trace.
Matrix jacobian_matrix(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0);

JacobianReport jacobian_analytic(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0,
                                 std::optional<double> rank_tolerance = std::nullopt);

struct FdJacobian {
    Matrix d;
    // Set for activations without a Lipschitz derivative (relu) when some
    // pre-activation sits on the kink or changes sign within +-h.
    bool near_kink = false;
    std::size_t kink_columns = 0;
};

// Central differences, one theta coordinate at a time.
FdJacobian jacobian_fd(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0,
                       double h = 1e-5);

// A C^1 map R^M -> R, the fixed nonlinearity of a one-layer affine model.
class ScalarField {
public:
    virtual ~ScalarField() = default;
    virtual std::size_t dim() const = 0;
    virtual double value(const Vector& z) const = 0;
    virtual Vector gradient(const Vector& z) const = 0;
};

// sigma(z) = sum_m c_m * act(z_m). With c = 1 and the identity this is the
// plain coordinate sum.
class WeightedActivationSum final : public ScalarField {
public:
    WeightedActivationSum(Vector weights, Activation act) : weights_(std::move(weights)), act_(act) {}

    std::size_t dim() const override { return static_cast<std::size_t>(weights_.size()); }
    double value(const Vector& z) const override;
    Vector gradient(const Vector& z) const override;

private:
    Vector weights_;
    Activation act_;
};

// N x M matrix whose row i is grad sigma evaluated at row i of points.
Matrix gradient_rows(const ScalarField& field, const Matrix& points);

// D for f(x) = sigma(W x + b): [grad_sigma|A(X) (bvtp) X^T, grad_sigma|A(X)]. The
// bias-omitted variant returns only the first block. Columns of the first
// block follow W row-major.
Matrix jacobian_fixed_nonlinearity(const ScalarField& field, const Matrix& w, const Vector& b,
                                   const Matrix& x, bool with_bias = true);

// D for f(x) = w^T act(W x + b) with variables ordered (w, W, b).
Matrix jacobian_two_layer(const Vector& w, const Matrix& weights, const Vector& b, const Matrix& x,
                          const Activation& act);

// Checks the hypotheses of the full-rank criterion for deep networks (X full
// rank, W_2..W_{L+1} full rank, activation derivative nonzero on the trace)
// and always reports the computed rank of D.
struct RankDiagnosis {
    bool x0_full_rank = false;
    std::vector<bool> weights_full_rank;  // layers 2..L+1
    bool derivative_nonvanishing = false;
    double min_abs_sigma_prime = 1.0;     // 1 when there are no hidden layers
    bool sufficient_condition_met = false;
    std::vector<std::string> violated;
    RankResult jacobian_rank;
    std::size_t expected_rank = 0;        // min(QN, K)
    bool d_full_rank = false;
    // False only when the hypotheses hold yet D was found rank deficient.
    bool consistent = true;
};

RankDiagnosis rank_along_condition(const NetworkSpec& spec, const NetworkParams& params, const Matrix& x0,
                                   std::optional<double> rank_tolerance = std::nullopt);

}  // namespace zeroloss

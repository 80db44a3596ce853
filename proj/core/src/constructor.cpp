#include "zeroloss/constructor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "zeroloss/errors.hpp"

namespace zeroloss {

namespace {

constexpr double kCostTolerance = 1e-8;
constexpr double kRoundTripTolerance = 1e-9;

void require_equal_widths(const NetworkSpec& spec, const TrainingSet& ts) {
    const std::size_t m = spec.input_dim();
    if (m != ts.input_dim()) {
        throw Error(ErrorKind::ShapeError, "data dimension differs from network input width");
    }
    if (spec.output_dim() != ts.output_dim()) {
        throw Error(ErrorKind::ShapeError, "label dimension differs from network output width");
    }
    if (ts.samples() >= m) {
        throw Error(ErrorKind::PreconditionViolation, "explicit construction requires M > N");
    }
    if (spec.output_dim() > m) {
        throw Error(ErrorKind::PreconditionViolation, "explicit construction requires Q <= M");
    }
    for (std::size_t l = 1; l + 1 < spec.dims.size(); ++l) {
        if (spec.dims[l] != m) {
            throw Error(ErrorKind::PreconditionViolation, "explicit construction requires all hidden widths equal to M");
        }
    }
    if (spec.hidden_layers() > 0 && !spec.output_bias) {
        throw Error(ErrorKind::PreconditionViolation, "deep construction needs an output-layer bias");
    }
}

void finish(ConstructionRecord& rec, const TrainingSet& ts) {
    const ZeroLossCheck check = verify_zero_loss(rec.spec, rec.params, ts);
    rec.achieved_cost = check.cost;
    if (!(check.cost < kCostTolerance)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << to_string(rec.method) << " construction reached cost " << check.cost;
        throw Error(ErrorKind::NumericalFailure, msg.str());
    }
}

std::string layer_prefix(std::size_t layer) { return "layer " + std::to_string(layer) + ": "; }

}  // namespace

const char* to_string(ConstructionMethod method) {
    switch (method) {
        case ConstructionMethod::Linear: return "linear";
        case ConstructionMethod::GeneralPullback: return "general_pullback";
        case ConstructionMethod::PositiveSector: return "positive_sector";
    }
    return "unknown";
}

Matrix solve_input_layer(const Matrix& x0, const Matrix& target, const Vector& b) {
    if (target.cols() != x0.cols() || target.rows() != b.size()) {
        throw Error(ErrorKind::ShapeError, "input-layer regression: target shape mismatch");
    }
    Matrix rhs = target;
    rhs.colwise() -= b;
    return pseudo_solve(x0, rhs.transpose()).transpose();
}

ZeroLossCheck verify_zero_loss(const NetworkSpec& spec, const NetworkParams& params, const TrainingSet& ts) {
    const Matrix out = forward(spec, params, ts.x0).output();
    ZeroLossCheck check;
    check.cost = cost_of_output(out, ts.y_omega);
    check.max_abs_residual = (out - ts.y_omega).cwiseAbs().maxCoeff();
    return check;
}

ConstructionRecord construct_linear(const TrainingSet& ts, const std::optional<Vector>& b1) {
    const auto q = static_cast<Eigen::Index>(ts.output_dim());
    const Vector bias = b1.value_or(Vector::Zero(q));
    if (ts.samples() >= ts.input_dim()) {
        throw Error(ErrorKind::PreconditionViolation, "linear construction requires N < M");
    }
    ConstructionRecord rec;
    rec.spec = NetworkSpec({ts.input_dim(), ts.output_dim()}, Activation::identity());
    rec.method = ConstructionMethod::Linear;
    rec.params = NetworkParams::zeros(rec.spec);
    rec.params.weights[0] = solve_input_layer(ts.x0, ts.y_omega, bias);
    rec.params.biases[0] = bias;
    rec.intermediates.push_back(ts.y_omega);
    finish(rec, ts);
    return rec;
}

PullbackStep pullback_layer(const Activation& act, const Matrix& s_next) {
    require_finite(s_next, "pullback target");
    const auto m = s_next.rows();
    const LocalDiffeoPoint pt = local_diffeo_point(act, static_cast<std::size_t>(m));

    PullbackStep step;
    step.w = Matrix::Zero(m, m);
    step.b.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double lo = s_next.row(i).minCoeff();
        const double hi = s_next.row(i).maxCoeff();
        const double center = 0.5 * (lo + hi);
        double half = 0.5 * (hi - lo);
        if (!(half > 1e-12 * (1.0 + std::abs(center)))) {
            half = 0.5;
        } else {
            half *= 1.1;  // keep the data strictly inside the open box
        }
        const double box_center = 0.5 * (pt.box_lo(i) + pt.box_hi(i));
        const double box_half = 0.5 * (pt.box_hi(i) - pt.box_lo(i));
        step.w(i, i) = half / box_half;
        step.b(i) = center - step.w(i, i) * box_center;
    }

    Matrix inside = s_next;
    inside.colwise() -= step.b;
    inside = step.w.diagonal().cwiseInverse().asDiagonal() * inside;
    step.s_prev = act.apply_inverse(inside);

    Matrix back = step.w * act.apply(step.s_prev);
    back.colwise() += step.b;
    const double scale = std::max(1.0, s_next.cwiseAbs().maxCoeff());
    const double err = (back - s_next).cwiseAbs().maxCoeff();
    if (!(err <= kRoundTripTolerance * scale)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "pullback round trip error " << err;
        throw Error(ErrorKind::NumericalFailure, msg.str());
    }
    return step;
}

ConstructionRecord construct_general(const NetworkSpec& spec, const TrainingSet& ts) {
    require_equal_widths(spec, ts);
    if (spec.hidden_layers() == 0) {
        return construct_linear(ts);
    }
    const auto m = static_cast<Eigen::Index>(spec.input_dim());
    const auto q = static_cast<Eigen::Index>(spec.output_dim());
    const std::size_t layers = spec.layers();

    ConstructionRecord rec;
    rec.spec = spec;
    rec.method = ConstructionMethod::GeneralPullback;
    rec.params = NetworkParams::zeros(spec);

    // targets[l] = S^(l+1): zero-padded labels at the top.
    std::vector<Matrix> targets(layers);
    targets[layers - 1] = Matrix::Zero(m, ts.y_omega.cols());
    targets[layers - 1].topRows(q) = ts.y_omega;

    for (std::size_t l = layers - 1; l >= 1; --l) {
        PullbackStep step;
        try {
            step = pullback_layer(spec.activation, targets[l]);
        } catch (const DomainError& e) {
            throw DomainError(e.row(), e.col(), e.value(), layer_prefix(l + 1) + e.what());
        } catch (const Error& e) {
            throw Error(e.kind(), layer_prefix(l + 1) + e.what());
        }
        if (l == layers - 1) {
            // Keep the first Q coordinates: W_{L+1} = P W', b_{L+1} = P b'.
            rec.params.weights[l] = step.w.topRows(q);
            rec.params.biases[l] = step.b.head(q);
        } else {
            rec.params.weights[l] = step.w;
            rec.params.biases[l] = step.b;
        }
        targets[l - 1] = std::move(step.s_prev);
    }

    rec.params.weights[0] = solve_input_layer(ts.x0, targets[0], Vector::Zero(m));
    rec.intermediates = std::move(targets);
    finish(rec, ts);
    return rec;
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
    const Matrix g = gaussian_matrix(n, n, seed);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    // Sign fix so the distribution is Haar.
    const Vector diag = qr.matrixQR().diagonal();
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
        if (diag(i) < 0.0) q.col(i) = -q.col(i);
    }
    return q;
}

namespace {

Matrix positive_output_weights(std::size_t q, std::size_t m, std::uint64_t& seed) {
    for (int attempt = 0; attempt < 100; ++attempt, ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(0.5, 1.5);
        Matrix w(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(m));
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = unif(rng);
        }
        if (numerical_rank(w).numerical_rank == q) return w;
    }
    throw Error(ErrorKind::NumericalFailure, "could not draw a full-rank positive output matrix");
}

double translation(const Matrix& untranslated, double margin) {
    return std::max(0.0, -untranslated.minCoeff()) + margin;
}

}  // namespace

ConstructionRecord construct_positive_sector(const NetworkSpec& spec, const TrainingSet& ts,
                                             const PositiveSectorOptions& options) {
    require_equal_widths(spec, ts);
    if (!std::isfinite(options.lambda_margin)) {
        throw Error(ErrorKind::ValidationError, "lambda margin must be finite");
    }
    const std::size_t hidden = spec.hidden_layers();
    if (hidden == 0) {
        return construct_linear(ts);
    }
    if (!spec.activation.flags().is_diffeo_to_positive) {
        throw Error(ErrorKind::PreconditionViolation,
                    "positive-sector construction needs a diffeomorphism onto (0, inf), got " +
                        spec.activation.name());
    }
    const std::size_t m = spec.input_dim();
    const auto mi = static_cast<Eigen::Index>(m);
    const std::size_t q = spec.output_dim();
    const auto qi = static_cast<Eigen::Index>(q);
    const Activation& act = spec.activation;

    // Interior weights W_2..W_L.
    std::vector<Matrix> interior = options.interior_weights;
    if (interior.empty()) {
        for (std::size_t l = 0; l + 1 < hidden; ++l) {
            interior.push_back(random_orthogonal(m, options.interior_seed * 1000003ULL + l));
        }
    }
    if (interior.size() + 1 != hidden) {
        throw Error(ErrorKind::ShapeError, "expected " + std::to_string(hidden - 1) + " interior weight matrices");
    }
    for (std::size_t i = 0; i < interior.size(); ++i) {
        if (interior[i].rows() != mi || interior[i].cols() != mi) {
            throw Error(ErrorKind::ShapeError, "interior weight W_" + std::to_string(i + 2) + " must be M x M");
        }
        if (!numerical_rank(interior[i]).full_rank()) {
            throw Error(ErrorKind::RankDeficient, "interior weight W_" + std::to_string(i + 2) + " is singular");
        }
    }
    if (static_cast<Eigen::Index>(numerical_rank(ts.x0).numerical_rank) != ts.x0.cols()) {
        throw Error(ErrorKind::RankDeficient, "training inputs are not of full column rank");
    }

    ConstructionRecord rec;
    rec.spec = spec;
    rec.method = ConstructionMethod::PositiveSector;
    rec.params = NetworkParams::zeros(spec);
    rec.output_weight_seed = options.output_weight_seed;

    // Output layer: X^(L) = W^T (W W^T)^{-1} (Y - B) with B chosen so that
    // (W W^T)^{-1} (Y - B) = V + lambda, V = (W W^T)^{-1} Y.
    const Matrix w_out = positive_output_weights(q, m, rec.output_weight_seed);
    const Matrix gram = w_out * w_out.transpose();
    const Eigen::LDLT<Matrix> gram_solver(gram);
    const Matrix v = gram_solver.solve(ts.y_omega);
    const double lambda_out = translation(v, options.lambda_margin);
    const Vector b_out = -lambda_out * (gram * Vector::Ones(qi));
    rec.params.weights[hidden] = w_out;
    rec.params.biases[hidden] = b_out;
    rec.lambda_values.push_back(lambda_out);

    std::vector<Matrix> outputs(hidden + 1);  // X^(0) .. X^(L)
    outputs[0] = ts.x0;
    outputs[hidden] = w_out.transpose() * (v.array() + lambda_out).matrix();

    // X^(l-1) = W_l^{-1} sigma^{-1}(X^(l)) - W_l^{-1} B_l with -W_l^{-1} b_l = lambda u.
    for (std::size_t l = hidden; l >= 2; --l) {
        const Matrix& w = interior[l - 2];
        Matrix pre;
        try {
            pre = act.apply_inverse(outputs[l]);
        } catch (const DomainError& e) {
            throw DomainError(e.row(), e.col(), e.value(), layer_prefix(l) + e.what());
        }
        const Eigen::PartialPivLU<Matrix> lu(w);
        const Matrix untranslated = lu.solve(pre);
        const double lambda = translation(untranslated, options.lambda_margin);
        rec.params.weights[l - 1] = w;
        rec.params.biases[l - 1] = -lambda * (w * Vector::Ones(mi));
        rec.lambda_values.push_back(lambda);
        outputs[l - 1] = (untranslated.array() + lambda).matrix();
    }

    Matrix first_pre;
    try {
        first_pre = act.apply_inverse(outputs[1]);
    } catch (const DomainError& e) {
        throw DomainError(e.row(), e.col(), e.value(), layer_prefix(1) + e.what());
    }
    rec.params.weights[0] = solve_input_layer(ts.x0, first_pre, Vector::Zero(mi));
    rec.intermediates = std::move(outputs);
    finish(rec, ts);
    return rec;
}

BumpSumField::BumpSumField(Matrix centers, Matrix gradients, double radius)
    : centers_(std::move(centers)), gradients_(std::move(gradients)), radius_(radius) {
    if (centers_.rows() != gradients_.rows() || centers_.cols() != gradients_.cols()) {
        throw Error(ErrorKind::ShapeError, "bump centers and gradients must have the same shape");
    }
    if (!(radius_ > 0.0)) throw Error(ErrorKind::ValidationError, "bump radius must be positive");
}

double BumpSumField::value(const Vector& z) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < centers_.rows(); ++i) {
        const Vector d = z - centers_.row(i).transpose();
        const double s2 = d.squaredNorm() / (radius_ * radius_);
        if (s2 >= 1.0) continue;
        const double phi = std::exp(1.0 - 1.0 / (1.0 - s2));
        total += phi * gradients_.row(i).dot(d);
    }
    return total;
}

Vector BumpSumField::gradient(const Vector& z) const {
    Vector grad = Vector::Zero(z.size());
    for (Eigen::Index i = 0; i < centers_.rows(); ++i) {
        const Vector d = z - centers_.row(i).transpose();
        const double s2 = d.squaredNorm() / (radius_ * radius_);
        if (s2 >= 1.0) continue;
        const double one_minus = 1.0 - s2;
        const double phi = std::exp(1.0 - 1.0 / one_minus);
        // grad phi(|d|/r) = phi * (-2 / (1 - s^2)^2) * d / r^2
        const double dphi = phi * (-2.0 / (one_minus * one_minus)) / (radius_ * radius_);
        const double lin = gradients_.row(i).dot(d);
        grad += phi * gradients_.row(i).transpose() + (dphi * lin) * d;
    }
    return grad;
}

BumpSumField build_gradient_matching_activation(const Matrix& ax, const Matrix& g) {
    require_finite(ax, "gradient-matching centers");
    require_finite(g, "gradient-matching targets");
    if (ax.rows() != g.rows() || ax.cols() != g.cols()) {
        throw Error(ErrorKind::ShapeError, "centers and target gradients must both be N x M");
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ax.rows(); ++i) {
        for (Eigen::Index k = i + 1; k < ax.rows(); ++k) {
            const double dist = (ax.row(i) - ax.row(k)).norm();
            const double scale = 1.0 + std::max(ax.row(i).norm(), ax.row(k).norm());
            if (dist <= 1e-12 * scale) {
                throw Error(ErrorKind::DuplicateCenters, "rows " + std::to_string(i) + " and " +
                                                             std::to_string(k) + " of A(X) coincide");
            }
            min_dist = std::min(min_dist, dist);
        }
    }
    const double radius = std::isfinite(min_dist) ? 0.45 * min_dist : 1.0;
    return BumpSumField(ax, g, radius);
}

}  // namespace zeroloss

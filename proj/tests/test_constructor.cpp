#include <gtest/gtest.h>

#include "oracles.hpp"
#include "zeroloss/constructor.hpp"
#include "zeroloss/errors.hpp"
#include "zeroloss/jacobian.hpp"

using namespace zeroloss;

namespace {

NetworkSpec square_spec(std::size_t m, std::size_t depth, std::size_t q, const Activation& act) {
    std::vector<std::size_t> dims(depth + 1, m);
    dims.push_back(q);
    return NetworkSpec(dims, act);
}

double sup_distance(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(ConstructLinear, PaddedIdentityData) {
    Matrix x0 = Matrix::Zero(5, 3);
    x0.topRows(3) = Matrix::Identity(3, 3);
    Matrix outputs(2, 2);
    outputs << 1.0, 2.0, -1.0, 3.0;
    const TrainingSet ts = make_training_set(x0, outputs, {0, 1, 1});
    const ConstructionRecord rec = construct_linear(ts);
    Matrix expected = Matrix::Zero(2, 5);
    expected.leftCols(3) = ts.y_omega;
    EXPECT_LT(oracle::max_abs(rec.params.weights[0] - expected), 1e-15);
    EXPECT_EQ(rec.params.biases[0], Vector::Zero(2));
    EXPECT_EQ(rec.achieved_cost, 0.0);
    EXPECT_EQ(rec.method, ConstructionMethod::Linear);
}

TEST(ConstructLinear, SeededInstance) {
    const TrainingSet ts = generate_generic_data(10, 6, 3, 1);
    const ConstructionRecord rec = construct_linear(ts);
    EXPECT_LT(rec.achieved_cost, 1e-16 * std::max(1.0, ts.y_omega.squaredNorm()));
    EXPECT_LT(oracle::naive_cost(rec.spec, rec.params, ts), 1e-16);
}

TEST(ConstructLinear, BiasShiftsSolution) {
    const TrainingSet ts = generate_generic_data(7, 4, 2, 2);
    const Vector b1 = Vector::Constant(2, 0.75);
    const ConstructionRecord base = construct_linear(ts);
    const ConstructionRecord shifted = construct_linear(ts, b1);
    EXPECT_EQ(shifted.params.biases[0], b1);
    EXPECT_LT(shifted.achieved_cost, 1e-20);
    // W(b) = W(0) - b u^T (X^T X)^{-1} X^T.
    const Matrix pinv = (ts.x0.transpose() * ts.x0).inverse() * ts.x0.transpose();
    const Matrix delta = b1 * Vector::Ones(4).transpose() * pinv;
    EXPECT_LT(oracle::max_abs(shifted.params.weights[0] - (base.params.weights[0] - delta)), 1e-12);
}

TEST(ConstructLinear, RankDeficientDataRejected) {
    const Matrix x0 = generate_duplicate_column_data(6, 4, 1);
    const TrainingSet ts = make_training_set(x0, Matrix::Identity(2, 2), {0, 1, 0, 1});
    try {
        construct_linear(ts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
    }
}

TEST(PullbackLayer, SoftplusRoundTrip) {
    const Matrix s_next = (gaussian_matrix(4, 6, 1).cwiseAbs().array() + 0.5).matrix();
    const PullbackStep step = pullback_layer(Activation::softplus(), s_next);
    Matrix back = step.w * Activation::softplus().apply(step.s_prev);
    back.colwise() += step.b;
    EXPECT_LT(oracle::max_abs(back - s_next), 1e-10);
    EXPECT_TRUE(step.w.isDiagonal());
}

TEST(PullbackLayer, TanhLargeEntries) {
    const Matrix s_next = 1e3 * gaussian_matrix(5, 7, 2);
    const PullbackStep step = pullback_layer(Activation::tanh(), s_next);
    // The scaled data sits inside the (-0.9, 0.9) box.
    const Matrix inner = Activation::tanh().apply(step.s_prev);
    EXPECT_LT(inner.cwiseAbs().maxCoeff(), 0.9);
    Matrix back = step.w * inner;
    back.colwise() += step.b;
    EXPECT_LT(oracle::max_abs(back - s_next) / oracle::max_abs(s_next), 1e-9);
}

TEST(PullbackLayer, SingleColumnAndRelu) {
    Matrix single(3, 1);
    single << 1.0, -2.0, 5.0;
    const PullbackStep step = pullback_layer(Activation::tanh(), single);
    Matrix back = step.w * Activation::tanh().apply(step.s_prev);
    back.colwise() += step.b;
    EXPECT_LT(oracle::max_abs(back - single), 1e-10);
    try {
        pullback_layer(Activation::relu(), single);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotLocalDiffeo);
    }
}

TEST(ConstructGeneral, TanhDeep) {
    const TrainingSet ts = generate_generic_data(8, 5, 2, 7);
    const NetworkSpec spec = square_spec(8, 3, 2, Activation::tanh());
    const ConstructionRecord rec = construct_general(spec, ts);
    EXPECT_EQ(rec.method, ConstructionMethod::GeneralPullback);
    EXPECT_LT(rec.achieved_cost, 1e-8);
    EXPECT_LT(oracle::naive_cost(spec, rec.params, ts), 1e-8);
    // Stored pre-activation targets agree with the forward pass.
    const ForwardTrace t = forward(spec, rec.params, ts.x0);
    ASSERT_EQ(rec.intermediates.size(), 4u);
    for (std::size_t l = 0; l < 3; ++l) {
        const double scale = std::max(1.0, oracle::max_abs(rec.intermediates[l]));
        EXPECT_LT(oracle::max_abs(t.pre_activations[l] - rec.intermediates[l]) / scale, 1e-9) << "layer " << l + 1;
    }
}

TEST(ConstructGeneral, ZeroDepthIsLinear) {
    const TrainingSet ts = generate_generic_data(6, 4, 2, 3);
    const ConstructionRecord general = construct_general(NetworkSpec({6, 2}, Activation::tanh()), ts);
    const ConstructionRecord linear = construct_linear(ts);
    EXPECT_EQ(general.params.weights[0], linear.params.weights[0]);
    EXPECT_EQ(general.params.biases[0], linear.params.biases[0]);
}

TEST(ConstructGeneral, OutputDimensionEqualsWidth) {
    const TrainingSet ts = generate_generic_data(6, 4, 6, 5);
    const NetworkSpec spec = square_spec(6, 2, 6, Activation::softplus());
    const ConstructionRecord rec = construct_general(spec, ts);
    EXPECT_LT(rec.achieved_cost, 1e-8);
}

TEST(ConstructGeneral, RejectsUnsupportedShapes) {
    const TrainingSet ts = generate_generic_data(6, 4, 2, 5);
    EXPECT_THROW(construct_general(NetworkSpec({6, 5, 2}, Activation::tanh()), ts), Error);
    EXPECT_THROW(construct_general(square_spec(6, 2, 2, Activation::relu()), ts), Error);
}

TEST(ConstructPositiveSector, Deep) {
    const TrainingSet ts = generate_generic_data(8, 5, 2, 3);
    const NetworkSpec spec = square_spec(8, 4, 2, Activation::softplus());
    const ConstructionRecord rec = construct_positive_sector(spec, ts);
    EXPECT_EQ(rec.method, ConstructionMethod::PositiveSector);
    EXPECT_LT(rec.achieved_cost, 1e-10);
    EXPECT_LT(oracle::naive_cost(spec, rec.params, ts), 1e-10);
    ASSERT_EQ(rec.lambda_values.size(), 4u);
    for (double lambda : rec.lambda_values) EXPECT_GT(lambda, 0.0);
    // Hidden targets live in the positive sector and match the forward pass.
    const ForwardTrace t = forward(spec, rec.params, ts.x0);
    ASSERT_EQ(rec.intermediates.size(), 5u);
    for (std::size_t l = 1; l <= 4; ++l) {
        EXPECT_GT(rec.intermediates[l].minCoeff(), 0.0);
        const double scale = std::max(1.0, oracle::max_abs(rec.intermediates[l]));
        EXPECT_LT(oracle::max_abs(t.layer_outputs[l] - rec.intermediates[l]) / scale, 1e-9);
    }
    // The output layer is entrywise positive.
    EXPECT_GT(rec.params.weights.back().minCoeff(), 0.0);
}

TEST(ConstructPositiveSector, SingleHiddenLayer) {
    const TrainingSet ts = generate_generic_data(6, 4, 3, 9);
    const ConstructionRecord rec = construct_positive_sector(square_spec(6, 1, 3, Activation::mollified_relu(0.05)), ts);
    EXPECT_LT(rec.achieved_cost, 1e-8);
    EXPECT_EQ(rec.lambda_values.size(), 1u);
    EXPECT_EQ(rec.params.biases[0], Vector::Zero(6));
}

TEST(ConstructPositiveSector, DegenerateFamily) {
    const TrainingSet ts = generate_generic_data(8, 6, 2, 11);
    const NetworkSpec spec = square_spec(8, 3, 2, Activation::softplus());
    std::vector<Vector> thetas;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        PositiveSectorOptions opts;
        opts.interior_seed = s;
        const ConstructionRecord rec = construct_positive_sector(spec, ts, opts);
        EXPECT_LT(rec.achieved_cost, 1e-8);
        thetas.push_back(flatten(spec, rec.params));
    }
    EXPECT_GT(sup_distance(thetas[0], thetas[1]), 1e-3);
    EXPECT_GT(sup_distance(thetas[1], thetas[2]), 1e-3);
}

TEST(ConstructPositiveSector, ExplicitInteriorWeights) {
    const TrainingSet ts = generate_generic_data(5, 3, 1, 2);
    const NetworkSpec spec = square_spec(5, 2, 1, Activation::softplus());
    PositiveSectorOptions opts;
    opts.interior_weights = {2.0 * Matrix::Identity(5, 5)};
    const ConstructionRecord rec = construct_positive_sector(spec, ts, opts);
    EXPECT_EQ(rec.params.weights[1], 2.0 * Matrix::Identity(5, 5));
    EXPECT_LT(rec.achieved_cost, 1e-8);

    opts.interior_weights = {Matrix::Zero(5, 5)};
    EXPECT_THROW(construct_positive_sector(spec, ts, opts), Error);
}

TEST(ConstructPositiveSector, NegativeMarginHitsDomainError) {
    const TrainingSet ts = generate_generic_data(8, 5, 2, 1);
    PositiveSectorOptions opts;
    opts.lambda_margin = -100.0;
    EXPECT_THROW(construct_positive_sector(square_spec(8, 3, 2, Activation::softplus()), ts, opts), DomainError);
}

TEST(ConstructPositiveSector, RequiresPositiveDiffeo) {
    const TrainingSet ts = generate_generic_data(6, 4, 2, 1);
    EXPECT_THROW(construct_positive_sector(square_spec(6, 2, 2, Activation::tanh()), ts), Error);
}

TEST(ConstructPositiveSector, FullRankNeighbourhood) {
    const TrainingSet ts = generate_generic_data(8, 5, 2, 4);
    const NetworkSpec spec = square_spec(8, 2, 2, Activation::softplus());
    const ConstructionRecord rec = construct_positive_sector(spec, ts);
    const Vector theta = flatten(spec, rec.params);
    for (std::uint64_t k = 0; k < 10; ++k) {
        Vector delta = gaussian_matrix(theta.size(), 1, 500 + k);
        delta *= 1e-6 / delta.cwiseAbs().maxCoeff();
        const JacobianReport r = jacobian_analytic(spec, unflatten(spec, theta + delta), ts.x0);
        EXPECT_EQ(r.rank.numerical_rank, 10u);
    }
}

TEST(VerifyZeroLoss, ReportsResidual) {
    const TrainingSet ts = generate_generic_data(6, 4, 2, 6);
    const NetworkSpec spec = square_spec(6, 1, 2, Activation::softplus());
    ConstructionRecord rec = construct_positive_sector(spec, ts);
    EXPECT_LT(verify_zero_loss(spec, rec.params, ts).max_abs_residual, 1e-9);
    rec.params.biases.back()(0) += 0.5;
    const ZeroLossCheck bad = verify_zero_loss(spec, rec.params, ts);
    EXPECT_NEAR(bad.max_abs_residual, 0.5, 1e-9);
    EXPECT_NEAR(bad.cost, 0.125, 1e-9);
}

TEST(RandomOrthogonal, Orthogonal) {
    const Matrix q = random_orthogonal(6, 3);
    EXPECT_LT(oracle::max_abs(q.transpose() * q - Matrix::Identity(6, 6)), 1e-12);
    EXPECT_EQ(random_orthogonal(6, 3), q);
    EXPECT_NE(random_orthogonal(6, 4), q);
}

TEST(GradientMatching, SingleCenter) {
    Matrix c(1, 3), g(1, 3);
    c << 0.5, -1.0, 2.0;
    g << 1.5, 0.0, -2.0;
    const BumpSumField field = build_gradient_matching_activation(c, g);
    EXPECT_EQ(field.radius(), 1.0);
    const Vector z = c.row(0).transpose();
    const Vector fd = oracle::central_fd(
                          [&](const Vector& t) {
                              Vector v(1);
                              v(0) = field.value(t);
                              return v;
                          },
                          z, 1e-6)
                          .row(0)
                          .transpose();
    EXPECT_LT((fd - g.row(0).transpose()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((field.gradient(z) - g.row(0).transpose()).cwiseAbs().maxCoeff(), 1e-15);
    // Compact support.
    EXPECT_EQ(field.value(z + Vector::Constant(3, 1.0)), 0.0);
}

TEST(GradientMatching, AnalyticGradientMatchesFd) {
    const Matrix centers = gaussian_matrix(4, 3, 1);
    const BumpSumField field = build_gradient_matching_activation(centers, gaussian_matrix(4, 3, 2));
    for (std::uint64_t k = 0; k < 20; ++k) {
        const Vector z = centers.row(static_cast<Eigen::Index>(k % 4)).transpose() +
                         0.4 * field.radius() * Vector(gaussian_matrix(3, 1, 100 + k)).normalized();
        const auto f = [&](const Vector& t) {
            Vector v(1);
            v(0) = field.value(t);
            return v;
        };
        EXPECT_LT((oracle::central_fd(f, z, 1e-6).row(0).transpose() - field.gradient(z)).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(GradientMatching, RankDeficientDataFullRankJacobian) {
    const Matrix x = generate_degenerate_data(5, 4, 2, 3);
    const Matrix w = gaussian_matrix(6, 5, 4);
    const Vector b = gaussian_matrix(6, 1, 5);
    Matrix ax = w * x;
    ax.colwise() += b;
    const Matrix g = gaussian_matrix(4, 6, 6);
    const BumpSumField field = build_gradient_matching_activation(ax.transpose(), g);
    EXPECT_LT(oracle::max_abs(gradient_rows(field, ax.transpose()) - g), 1e-12);
    const Matrix d = jacobian_fixed_nonlinearity(field, w, b, x, false);
    EXPECT_EQ(numerical_rank(x).numerical_rank, 2u);
    EXPECT_EQ(numerical_rank(d).numerical_rank, 4u);
}

TEST(GradientMatching, ZeroTargetRowLosesRank) {
    const Matrix x = gaussian_matrix(5, 4, 7);
    const Matrix w = gaussian_matrix(6, 5, 8);
    Matrix ax = w * x;
    Matrix g = gaussian_matrix(4, 6, 9);
    g.row(2).setZero();
    const BumpSumField field = build_gradient_matching_activation(ax.transpose(), g);
    const Matrix d = jacobian_fixed_nonlinearity(field, w, Vector::Zero(6), x, false);
    EXPECT_LT(numerical_rank(d).numerical_rank, 4u);
}

TEST(GradientMatching, DuplicateCentersRejected) {
    Matrix c = gaussian_matrix(3, 2, 1);
    c.row(2) = c.row(0);
    try {
        build_gradient_matching_activation(c, gaussian_matrix(3, 2, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DuplicateCenters);
    }
}

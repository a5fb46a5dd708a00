#include <doctest.h>

#include <numbers>
#include <random>

#include "hyperproj/error.hpp"
#include "hyperproj/projection.hpp"
#include "oracles.hpp"

using namespace hyperproj;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix eye(Eigen::Index d) { return Matrix::Identity(d, d); }
Matrix zeros(Eigen::Index d) { return Matrix::Zero(d, d); }

Matrix rows2(double a, double b) {
  Matrix m(1, 2);
  m << a, b;
  return m;
}

constexpr RegularizerKind kAllKinds[] = {RegularizerKind::none, RegularizerKind::asymmetric_reproj,
                                         RegularizerKind::asymmetric_plain, RegularizerKind::neighbor_reproj,
                                         RegularizerKind::neighbor_plain};

oracle::LossForm form_of(const Objective& obj) {
  oracle::LossForm s;
  s.regularized = obj.kind != RegularizerKind::none;
  s.reproject = reprojects(obj.kind);
  s.neighbor = uses_negatives(obj.kind);
  s.cosine = obj.similarity == Similarity::cosine;
  s.lambda = obj.lambda;
  return s;
}

std::vector<double> bias_vector(const Projection& p) {
  return std::vector<double>(p.bias.data(), p.bias.data() + p.bias.size());
}

// Worst relative error of the analytic gradient over `trials` random draws.
double worst_gradient_error(RegularizerKind kind, Eigen::Index d, int trials, std::uint64_t seed, bool bias,
                            Similarity similarity) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> batch_size(1, 6);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index n = batch_size(rng);
    Projection phi(oracle::gaussian(d, d, rng, 0.5));
    if (bias) phi.bias = oracle::gaussian(1, d, rng, 0.3).row(0);
    const Matrix x = oracle::gaussian(n, d, rng);
    const Matrix y = oracle::gaussian(n, d, rng);
    const Matrix z = oracle::gaussian(n, d, rng);
    const Objective obj{kind, 0.7, similarity};
    const Batch batch{x, y, &z};
    const auto analytic = gradient(phi, batch, obj);
    const auto b = bias_vector(phi);
    const auto fd = oracle::central_difference(phi.weights, b, x, y, &z, form_of(obj));
    worst = std::max(worst, oracle::relative_error(analytic.weights, fd.weights));
    if (bias) {
      Matrix fb(1, d);
      for (Eigen::Index j = 0; j < d; ++j) fb(0, j) = fd.bias[static_cast<std::size_t>(j)];
      worst = std::max(worst, oracle::relative_error(Matrix(analytic.bias), fb));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("projection") {
  TEST_CASE("predict examples") {
    ProjectionModel model;
    model.projections = {Projection(mat2(0, 1, 1, 0))};
    model.clusters.centroids = RowMatrix::Zero(1, 2);
    Vector x(2);
    x << 1, 2;
    const Vector p = predict(model, x, 0);
    CHECK(p[0] == 2.0);
    CHECK(p[1] == 1.0);
    model.projections = {Projection(eye(2))};
    CHECK(predict(model, x, 0) == x);
    model.projections = {Projection(zeros(2))};
    CHECK(predict(model, x, 0).isZero());
    CHECK_THROWS_AS(predict(model, x, 1), InputError);
    Vector wrong(3);
    CHECK_THROWS_AS(predict(model, wrong, 0), InputError);
  }

  TEST_CASE("predict is linear") {
    std::mt19937_64 rng(1);
    ProjectionModel model;
    model.projections = {Projection(oracle::gaussian(6, 6, rng))};
    model.clusters.centroids = RowMatrix::Zero(1, 6);
    const Matrix xs = oracle::gaussian(2, 6, rng);
    const Vector a = xs.row(0);
    const Vector b = xs.row(1);
    const Vector lhs = predict(model, 1.5 * a - 0.25 * b, 0);
    const Vector rhs = 1.5 * predict(model, a, 0) - 0.25 * predict(model, b, 0);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("baseline loss examples") {
    const Matrix x = rows2(1, 0);
    CHECK(loss_baseline(eye(2), x, x) == 0.0);
    CHECK(loss_baseline(eye(2), x, rows2(0, 1)) == doctest::Approx(2.0));
    std::mt19937_64 rng(2);
    const Matrix xs = oracle::gaussian(5, 3, rng);
    const Matrix ys = oracle::gaussian(5, 3, rng);
    CHECK(loss_baseline(zeros(3), xs, ys) == doctest::Approx(ys.rowwise().squaredNorm().mean()));
  }

  TEST_CASE("asymmetric regularizer examples") {
    const Matrix x = rows2(1, 0);
    CHECK(reg_asymmetric(zeros(2), x, true) == 0.0);
    CHECK(reg_asymmetric(eye(2), x, true) == doctest::Approx(1.0));
    const double c = std::cos(std::numbers::pi / 2);
    const double s = std::sin(std::numbers::pi / 2);
    CHECK(reg_asymmetric(mat2(c, s, -s, c), x, true) == doctest::Approx(1.0));
    CHECK(reg_asymmetric(mat2(c, s, -s, c), x, false) == doctest::Approx(0.0));
  }

  TEST_CASE("neighbor regularizer examples") {
    CHECK(reg_neighbor(mat2(1, 1, 0, 1), rows2(1, 0), rows2(0, 1), false) == doctest::Approx(1.0));
    // z orthogonal to x Phi Phi.
    CHECK(reg_neighbor(eye(2), rows2(1, 0), rows2(0, 1), true) == 0.0);
  }

  TEST_CASE("neighbor with z = x equals asymmetric bitwise") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
      const Projection phi(oracle::gaussian(4, 4, rng));
      const Matrix x = oracle::gaussian(7, 4, rng);
      for (bool reproject : {true, false}) {
        for (auto sim : {Similarity::dot, Similarity::cosine}) {
          CHECK(reg_neighbor(phi, x, x, reproject, sim) == reg_asymmetric(phi, x, reproject, sim));
        }
      }
    }
  }

  TEST_CASE("total loss combines terms") {
    const Matrix x = rows2(1, 0);
    const Matrix y = rows2(0, 1);
    const Batch batch{x, y, nullptr};
    const auto t = total_loss(eye(2), batch, {RegularizerKind::asymmetric_reproj, 0.1});
    CHECK(t.baseline == doctest::Approx(2.0));
    CHECK(t.regularizer == doctest::Approx(1.0));
    CHECK(t.total == doctest::Approx(2.1));

    const auto none5 = total_loss(eye(2), batch, {RegularizerKind::none, 5.0});
    const auto none0 = total_loss(eye(2), batch, {RegularizerKind::none, 0.0});
    CHECK(none5.total == none0.total);
    CHECK(none5.total == loss_baseline(eye(2), x, y));
    const auto zero = total_loss(eye(2), batch, {RegularizerKind::asymmetric_reproj, 0.0});
    CHECK(zero.total == none0.total);
  }

  TEST_CASE("neighbor objective requires z") {
    const Matrix x = rows2(1, 0);
    CHECK_THROWS_AS(total_loss(eye(2), {x, x, nullptr}, {RegularizerKind::neighbor_plain, 0.1}),
                    InputError);
    const Matrix wide(1, 3);
    CHECK_THROWS_AS(total_loss(eye(2), {x, wide, nullptr}, {}), InputError);
  }

  TEST_CASE("losses agree with the loop oracle") {
    std::mt19937_64 rng(4);
    for (auto kind : kAllKinds) {
      for (auto sim : {Similarity::dot, Similarity::cosine}) {
        Projection phi(oracle::gaussian(5, 5, rng, 0.5), oracle::gaussian(1, 5, rng, 0.2).row(0));
        const Matrix x = oracle::gaussian(9, 5, rng);
        const Matrix y = oracle::gaussian(9, 5, rng);
        const Matrix z = oracle::gaussian(9, 5, rng);
        const Objective obj{kind, 0.3, sim};
        const double got = total_loss(phi, {x, y, &z}, obj).total;
        const double want = oracle::loss(phi.weights, bias_vector(phi), x, y, &z, form_of(obj));
        CHECK(got == doctest::Approx(want).epsilon(1e-12));
        CHECK(loss_and_gradient(phi, {x, y, &z}, obj).loss.total == doctest::Approx(got).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("gradient at the exact fit is zero") {
    const Matrix x = rows2(0.3, -2);
    CHECK(gradient(eye(2), {x, x, nullptr}, {}).weights.isZero());
  }

  TEST_CASE("lambda zero gives the baseline gradient bitwise") {
    std::mt19937_64 rng(5);
    const Projection phi(oracle::gaussian(4, 4, rng));
    const Matrix x = oracle::gaussian(6, 4, rng);
    const Matrix y = oracle::gaussian(6, 4, rng);
    const Matrix z = oracle::gaussian(6, 4, rng);
    const auto base = gradient(phi, {x, y, &z}, {RegularizerKind::none, 0.0});
    for (auto kind : kAllKinds) {
      CHECK(gradient(phi, {x, y, &z}, {kind, 0.0}).weights == base.weights);
    }
  }

  TEST_CASE("gradients match central differences") {
    for (auto kind : kAllKinds) {
      for (Eigen::Index d : {2, 3, 5, 10}) {
        const double err = worst_gradient_error(kind, d, 30, 100 + static_cast<std::uint64_t>(d), false,
                                                Similarity::dot);
        INFO("kind=" << regularizer_name(kind) << " d=" << d);
        CHECK(err < 1e-4);
      }
    }
  }

  TEST_CASE("bias and cosine gradients match central differences") {
    for (auto kind : kAllKinds) {
      for (Eigen::Index d : {2, 5}) {
        INFO("kind=" << regularizer_name(kind) << " d=" << d);
        CHECK(worst_gradient_error(kind, d, 20, 7, true, Similarity::dot) < 1e-4);
        CHECK(worst_gradient_error(kind, d, 20, 8, false, Similarity::cosine) < 1e-4);
        CHECK(worst_gradient_error(kind, d, 20, 9, true, Similarity::cosine) < 1e-4);
      }
    }
  }

  TEST_CASE("regularizer names") {
    for (auto kind : kAllKinds) CHECK(parse_regularizer(regularizer_name(kind)) == kind);
    CHECK(parse_regularizer("neighbor-reproj") == RegularizerKind::neighbor_reproj);
    CHECK(parse_regularizer("asym") == RegularizerKind::asymmetric_plain);
    CHECK_FALSE(parse_regularizer("l2"));
  }

  TEST_CASE("model validation") {
    ProjectionModel model;
    model.projections = {Projection(eye(3))};
    model.clusters.centroids = RowMatrix::Zero(2, 3);
    CHECK_THROWS_AS(model.validate(), InputError);
    model.clusters.centroids = RowMatrix::Zero(1, 3);
    CHECK_NOTHROW(model.validate());
    model.projections[0].weights(1, 1) = INFINITY;
    CHECK_THROWS_AS(model.validate(), InputError);
  }
}

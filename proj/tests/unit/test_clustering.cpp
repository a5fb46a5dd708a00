#include <doctest.h>

#include <random>

#include "hyperproj/clustering.hpp"
#include "hyperproj/error.hpp"
#include "oracles.hpp"

using namespace hyperproj;

namespace {

RowMatrix two_blobs(std::size_t per_blob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.1);
  RowMatrix pts(static_cast<Eigen::Index>(2 * per_blob), 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    pts(i, 0) = (i % 2 == 0 ? 10.0 : -10.0) + jitter(rng);
    pts(i, 1) = jitter(rng);
  }
  return pts;
}

Vector row2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE("clustering") {
  TEST_CASE("offsets subtract source from target") {
    RowMatrix v(3, 2);
    v << 1, 0, 0, 1, 2, 5;
    const EmbeddingTable table({"x", "y", "w"}, v, false);
    const std::vector<RelationPair> pairs = {
        {"x", "y", Relation::hypernym}, {"y", "y2", Relation::hypernym}, {"w", "x", Relation::hypernym}};
    CHECK_THROWS_AS(offsets(pairs, table), InputError);

    const std::vector<RelationPair> ok = {
        {"x", "y", Relation::hypernym}, {"w", "x", Relation::hypernym}, {"y", "w", Relation::hypernym}};
    const RowMatrix off = offsets(ok, table);
    REQUIRE(off.rows() == 3);
    CHECK(off(0, 0) == -1.0);
    CHECK(off(0, 1) == 1.0);
    for (std::size_t i = 0; i < ok.size(); ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(off(static_cast<Eigen::Index>(i), j) ==
              table.vector_of(ok[i].target)[j] - table.vector_of(ok[i].source)[j]);
      }
    }
  }

  TEST_CASE("k=1 centroid is the mean") {
    std::mt19937_64 rng(4);
    const RowMatrix pts = oracle::gaussian(500, 6, rng, 3.0);
    KMeansOptions opts;
    opts.k = 1;
    const auto model = fit_kmeans(pts, opts);
    const Eigen::RowVectorXd mean = pts.colwise().mean();
    const double rel = (model.centroids.row(0) - mean).norm() / mean.norm();
    CHECK(rel < 1e-10);
  }

  TEST_CASE("two blobs are recovered") {
    KMeansOptions opts;
    opts.k = 2;
    opts.seed = 17;
    const auto model = fit_kmeans(two_blobs(200, 1), opts);
    const std::size_t pos = model.centroids(0, 0) > 0 ? 0 : 1;
    const auto c = static_cast<Eigen::Index>(pos);
    CHECK((model.centroids.row(c) - row2(10, 0)).norm() < 0.2);
    CHECK((model.centroids.row(1 - c) - row2(-10, 0)).norm() < 0.2);
  }

  TEST_CASE("k equal to the point count gives zero inertia") {
    std::mt19937_64 rng(2);
    const RowMatrix pts = oracle::gaussian(12, 3, rng);
    KMeansOptions opts;
    opts.k = 12;
    const auto model = fit_kmeans(pts, opts);
    CHECK(model.inertia == doctest::Approx(0.0));
  }

  TEST_CASE("inertia trace never increases and matches the oracle") {
    std::mt19937_64 rng(8);
    const RowMatrix pts = oracle::gaussian(400, 4, rng);
    for (std::size_t k : {2u, 5u, 9u}) {
      KMeansOptions opts;
      opts.k = k;
      opts.seed = k;
      const auto model = fit_kmeans(pts, opts);
      REQUIRE_FALSE(model.inertia_trace.empty());
      for (std::size_t i = 1; i < model.inertia_trace.size(); ++i) {
        CHECK(model.inertia_trace[i] <= model.inertia_trace[i - 1]);
      }
      CHECK(model.inertia == doctest::Approx(oracle::inertia(pts, model.centroids)).epsilon(1e-9));
    }
  }

  TEST_CASE("same seed, same centroids; threads do not matter") {
    std::mt19937_64 rng(3);
    const RowMatrix pts = oracle::gaussian(300, 5, rng);
    KMeansOptions opts;
    opts.k = 4;
    opts.seed = 99;
    const auto a = fit_kmeans(pts, opts);
    opts.threads = 3;
    const auto b = fit_kmeans(pts, opts);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia_trace == b.inertia_trace);
  }

  TEST_CASE("invalid inputs") {
    RowMatrix pts(2, 2);
    pts << 0, 0, 1, 1;
    KMeansOptions opts;
    opts.k = 3;
    CHECK_THROWS_AS(fit_kmeans(pts, opts), InputError);
    opts.k = 1;
    opts.max_iter = 0;
    CHECK_THROWS_AS(fit_kmeans(pts, opts), InputError);
    opts.max_iter = 10;
    pts(0, 0) = std::nan("");
    CHECK_THROWS_AS(fit_kmeans(pts, opts), InputError);
  }

  TEST_CASE("assignment picks the nearest centroid, ties to the lower index") {
    ClusterModel model;
    model.centroids.resize(2, 2);
    model.centroids << 0, 0, 10, 10;
    CHECK(assign_cluster(model, row2(1, 1)) == 0);
    CHECK(assign_cluster(model, row2(10, 10)) == 1);
    CHECK(assign_cluster(model, row2(5, 5)) == 0);
    CHECK(assign_cluster(model, row2(10, 0)) == 0);
  }
}

#include <doctest.h>

#include "hyperproj/error.hpp"
#include "hyperproj/synth.hpp"
#include "tempdir.hpp"

using namespace hyperproj;

TEST_SUITE("synth") {
  TEST_CASE("noise-free pairs follow the planted map") {
    SynthOptions o;
    o.dim = 6;
    o.pairs = 50;
    o.seed = 3;
    const auto fx = make_synthetic(o);
    REQUIRE(fx.planted.size() == 1);
    const Matrix& a = fx.planted[0];
    CHECK((a.transpose() * a - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
    const auto table = fx.table();
    CHECK(table.size() == 100);
    for (const auto& p : fx.relations) {
      CHECK(p.relation == Relation::hypernym);
      const Vector x = table.vector_of(p.source);
      CHECK(x.norm() == doctest::Approx(1.0));
      CHECK((x * a - table.vector_of(p.target)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("fixed rotation angle") {
    SynthOptions o;
    o.dim = 4;
    o.pairs = 5;
    o.rotation_deg = 30.0;
    const auto fx = make_synthetic(o);
    const Matrix& a = fx.planted[0];
    // Every rotation plane turns by 30 degrees, so trace = d cos 30.
    CHECK(a.trace() == doctest::Approx(4.0 * std::cos(std::numbers::pi / 6)));
  }

  TEST_CASE("distractors sit within the angle of their hyponym") {
    SynthOptions o;
    o.dim = 8;
    o.pairs = 30;
    o.distractors = 4;
    o.distractor_angle_deg = 15.0;
    const auto fx = make_synthetic(o);
    const auto table = fx.table();
    std::size_t synonyms = 0;
    for (const auto& p : fx.relations) {
      if (p.relation != Relation::synonym) continue;
      ++synonyms;
      const Vector x = table.vector_of(p.source);
      const Vector z = table.vector_of(p.target);
      CHECK(x.dot(z) / z.norm() >= std::cos(15.0 * std::numbers::pi / 180.0) - 1e-12);
    }
    CHECK(synonyms == 120);
  }

  TEST_CASE("same seed, same files") {
    TempDir a;
    TempDir b;
    SynthOptions o;
    o.pairs = 20;
    o.distractors = 1;
    o.filler = 5;
    write_synthetic(make_synthetic(o), a.path());
    write_synthetic(make_synthetic(o), b.path());
    auto slurp = [](const std::filesystem::path& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string((std::istreambuf_iterator<char>(in)), {});
    };
    CHECK(slurp(a / "embeddings.txt") == slurp(b / "embeddings.txt"));
    CHECK(slurp(a / "relations.tsv") == slurp(b / "relations.tsv"));
    o.seed = 1;
    write_synthetic(make_synthetic(o), b.path());
    CHECK(slurp(a / "embeddings.txt") != slurp(b / "embeddings.txt"));
  }

  TEST_CASE("planted clusters are dealt round-robin") {
    SynthOptions o;
    o.dim = 4;
    o.pairs = 6;
    o.planted_clusters = 3;
    const auto fx = make_synthetic(o);
    REQUIRE(fx.planted.size() == 3);
    const auto table = fx.table();
    for (std::size_t i = 0; i < fx.relations.size(); ++i) {
      const Vector x = table.vector_of(fx.relations[i].source);
      CHECK((x * fx.planted[i % 3] - table.vector_of(fx.relations[i].target)).norm() < 1e-12);
    }
  }

  TEST_CASE("option validation") {
    SynthOptions o;
    o.dim = 1;
    CHECK_THROWS_AS(make_synthetic(o), InputError);
    o = {};
    o.distractor_angle_deg = 90.0;
    CHECK_THROWS_AS(make_synthetic(o), InputError);
    o = {};
    o.noise = -1.0;
    CHECK_THROWS_AS(make_synthetic(o), InputError);
  }
}

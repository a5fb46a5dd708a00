#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "hyperproj/embeddings.hpp"
#include "hyperproj/error.hpp"
#include "hyperproj/hashing.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace hyperproj;

namespace {

EmbeddingTable three_words() {
  RowMatrix v(3, 2);
  v << 1, 0, 0, 1, -1, 0;
  return EmbeddingTable({"a", "b", "c"}, v, false);
}

Vector row2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

EmbeddingTable random_table(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const oracle::Mat g = oracle::gaussian(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return EmbeddingTable(words, RowMatrix(g), false);
}

}  // namespace

TEST_SUITE("embeddings") {
  TEST_CASE("text loader normalizes rows") {
    TempDir dir;
    const auto path = dir.write("e.txt", "2 2\nc 3 4\nd 0 2\n");
    const auto table = load_embeddings(path, EmbeddingFormat::text, true);
    REQUIRE(table.size() == 2);
    CHECK(table.row(0)[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(table.row(0)[1] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(table.vector_of("d")[1] == doctest::Approx(1.0));

    const auto raw = load_embeddings(path, EmbeddingFormat::text, false);
    CHECK(raw.row(0)[0] == 3.0);
    CHECK(raw.row(0)[1] == 4.0);
  }

  TEST_CASE("text loader without header") {
    TempDir dir;
    const auto table = load_embeddings(dir.write("e.txt", "x 1 2 3\ny 4 5 6\n"), EmbeddingFormat::text, false);
    CHECK(table.size() == 2);
    CHECK(table.dim() == 3);
    CHECK(table.vector_of("y")[2] == 6.0);
  }

  TEST_CASE("duplicate words keep the first row") {
    TempDir dir;
    const auto table = load_embeddings(dir.write("e.txt", "x 1 2\nx 3 4\ny 0 1\n"), EmbeddingFormat::text, false);
    CHECK(table.size() == 2);
    CHECK(table.vector_of("x")[0] == 1.0);
  }

  TEST_CASE("malformed embedding files are rejected") {
    TempDir dir;
    CHECK_THROWS_AS(load_embeddings(dir / "missing.txt", EmbeddingFormat::text, false), InputError);
    CHECK_THROWS_AS(load_embeddings(dir.write("r.txt", "x 1 2\ny 1\n"), EmbeddingFormat::text, false), InputError);
    CHECK_THROWS_AS(load_embeddings(dir.write("n.txt", "x 1 nan\n"), EmbeddingFormat::text, false), InputError);
    CHECK_THROWS_AS(load_embeddings(dir.write("z.txt", "x 0 0\n"), EmbeddingFormat::text, true), InputError);
  }

  TEST_CASE("binary loader reads little-endian floats") {
    TempDir dir;
    std::string bytes = "2 2\n";
    const float values[4] = {3.0f, 4.0f, -1.5f, 0.25f};
    bytes += "c ";
    bytes.append(reinterpret_cast<const char*>(values), 8);
    bytes += "\nd ";
    bytes.append(reinterpret_cast<const char*>(values + 2), 8);
    bytes += "\n";
    const auto table = load_embeddings(dir.write("e.bin", bytes), EmbeddingFormat::binary, false);
    REQUIRE(table.size() == 2);
    CHECK(table.vector_of("c")[1] == 4.0);
    CHECK(table.vector_of("d")[0] == -1.5);
    CHECK(table.vector_of("d")[1] == 0.25);
  }

  TEST_CASE("text and binary writers round-trip") {
    TempDir dir;
    const auto table = random_table(20, 7, 3);
    write_embeddings_text(table, dir / "t.txt");
    write_embeddings_binary(table, dir / "t.bin");
    const auto text = load_embeddings(dir / "t.txt", EmbeddingFormat::text, false);
    const auto bin = load_embeddings(dir / "t.bin", EmbeddingFormat::binary, false);
    REQUIRE(text.vocab() == table.vocab());
    REQUIRE(bin.vocab() == table.vocab());
    CHECK((text.vectors() - table.vectors()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((bin.vectors() - table.vectors()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(text.vocab_hash() == table.vocab_hash());
  }

  TEST_CASE("table construction validates input") {
    RowMatrix v(2, 2);
    v << 1, 0, 0, 1;
    CHECK_THROWS_AS(EmbeddingTable({"a", "a"}, v, false), InputError);
    CHECK_THROWS_AS(EmbeddingTable({"a"}, v, false), InputError);
    CHECK_THROWS_AS(three_words().vector_of("zzz"), InputError);
    CHECK_FALSE(three_words().contains("zzz"));
    CHECK(three_words().lookup("b") == std::optional<std::size_t>(1));
  }

  TEST_CASE("nearest neighbors on a hand-built vocabulary") {
    const auto table = three_words();
    const auto nn = nearest_neighbors(table, row2(1, 0), 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0].word == "a");
    CHECK(nn[0].score == doctest::Approx(1.0));
    CHECK(nn[1].word == "b");
    CHECK(nn[1].score == doctest::Approx(0.0));

    const auto excl = nearest_neighbors(table, row2(1, 0), 2, "a");
    REQUIRE(excl.size() == 2);
    CHECK(excl[0].word == "b");
    CHECK(excl[0].score == doctest::Approx(0.0));
    CHECK(excl[1].word == "c");
    CHECK(excl[1].score == doctest::Approx(-1.0));

    CHECK(nearest_neighbors(table, row2(1, 0), 5).size() == 3);
  }

  TEST_CASE("nearest neighbor errors") {
    const auto table = three_words();
    CHECK_THROWS_AS(nearest_neighbors(table, row2(0, 0), 2), NumericError);
    CHECK_THROWS_AS(nearest_neighbors(table, row2(1, 0), 0), InputError);
    Vector wrong(3);
    wrong << 1, 0, 0;
    CHECK_THROWS_AS(nearest_neighbors(table, wrong, 2), InputError);
  }

  TEST_CASE("zero rows are skipped under cosine") {
    RowMatrix v(3, 2);
    v << 0, 0, 1, 1, -1, 0;
    const EmbeddingTable table({"zero", "diag", "left"}, v, false);
    const auto nn = nearest_neighbors(table, row2(1, 0), 3);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0].word == "diag");
    NeighborQuery dot;
    dot.l = 3;
    dot.similarity = Similarity::dot;
    CHECK(nearest_neighbors(table, row2(1, 0), dot).size() == 3);
  }

  TEST_CASE("every word is its own first neighbor") {
    const auto table = random_table(200, 8, 11);
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto nn = nearest_neighbors(table, Vector(table.row(i)), 1);
      CHECK(nn[0].index == i);
    }
  }

  TEST_CASE("scan agrees with brute-force sort") {
    const auto table = random_table(300, 6, 5);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const oracle::Mat q = oracle::gaussian(1, 6, rng);
      const auto query = oracle::row_of(q, 0);
      const bool cosine = trial % 2 == 0;
      const std::optional<std::size_t> exclude =
          trial % 3 == 0 ? std::optional<std::size_t>(static_cast<std::size_t>(trial)) : std::nullopt;
      NeighborQuery opts;
      opts.l = 10;
      opts.exclude = exclude;
      opts.similarity = cosine ? Similarity::cosine : Similarity::dot;
      opts.threads = trial % 4 == 0 ? 3 : 1;
      const auto got = nearest_neighbors(table, Vector(q.row(0)), opts);
      const auto want = oracle::brute_neighbors(table.vectors(), query, 10, exclude, cosine);
      REQUIRE(got.size() == want.size());
      for (std::size_t r = 0; r < got.size(); ++r) {
        CHECK(got[r].index == want[r].index);
        CHECK(got[r].score == doctest::Approx(want[r].score).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("thread count does not change results") {
    const auto table = random_table(500, 5, 2);
    NeighborQuery one;
    one.l = 25;
    NeighborQuery many = one;
    many.threads = 4;
    const Vector q = table.row(7);
    CHECK(nearest_neighbors(table, q, one) == nearest_neighbors(table, q, many));
  }

  TEST_CASE("format and similarity names") {
    CHECK(parse_embedding_format("text") == EmbeddingFormat::text);
    CHECK(parse_embedding_format("binary") == EmbeddingFormat::binary);
    CHECK_FALSE(parse_embedding_format("csv"));
    CHECK(parse_similarity("cosine") == Similarity::cosine);
    CHECK(parse_similarity("dot") == Similarity::dot);
    CHECK_FALSE(parse_similarity("l2"));
  }

  TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex(std::string_view("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}

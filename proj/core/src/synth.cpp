#include "hyperproj/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "hyperproj/error.hpp"

namespace hyperproj {
namespace {

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

Vector gaussian_row(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(rng);
  return v;
}

Vector unit_row(std::size_t d, std::mt19937_64& rng) {
  while (true) {
    Vector v = gaussian_row(d, rng);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Matrix random_orthogonal(std::size_t d, std::mt19937_64& rng) {
  Matrix g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < g.rows(); ++i) g.row(i) = gaussian_row(d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

// Q^T R Q where R rotates by `angle` in consecutive coordinate planes.
Matrix planted_rotation(std::size_t d, double angle, std::mt19937_64& rng) {
  const Matrix q = random_orthogonal(d, rng);
  Matrix r = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (Eigen::Index i = 0; i + 1 < r.rows(); i += 2) {
    r(i, i) = c;
    r(i, i + 1) = s;
    r(i + 1, i) = -s;
    r(i + 1, i + 1) = c;
  }
  return q.transpose() * r * q;
}

}  // namespace

void SynthOptions::validate() const {
  if (dim < 2) throw InputError("synthetic dimension must be at least 2");
  if (pairs < 1) throw InputError("synthetic pair count must be positive");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InputError("noise must be non-negative");
  if (!(distractor_angle_deg > 0.0 && distractor_angle_deg < 90.0)) {
    throw InputError("distractor angle must lie in (0, 90) degrees");
  }
  if (planted_clusters < 1) throw InputError("planted cluster count must be positive");
  if (rotation_deg && !std::isfinite(*rotation_deg)) throw InputError("rotation angle must be finite");
}

SynthFixture make_synthetic(const SynthOptions& options) {
  options.validate();
  const std::size_t d = options.dim;
  const double deg = std::numbers::pi / 180.0;
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, options.distractor_angle_deg * deg);

  SynthFixture fx;
  for (std::size_t c = 0; c < options.planted_clusters; ++c) {
    fx.planted.push_back(options.rotation_deg ? planted_rotation(d, *options.rotation_deg * deg, rng)
                                              : random_orthogonal(d, rng));
  }

  const std::size_t total = options.pairs * (2 + options.distractors) + options.filler;
  fx.vectors.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(d));
  fx.words.reserve(total);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < options.pairs; ++i) {
    const Vector x = unit_row(d, rng);
    Vector y = x * fx.planted[i % options.planted_clusters];
    if (options.noise > 0.0) {
      for (Eigen::Index j = 0; j < y.size(); ++j) y[j] += options.noise * normal(rng);
    }
    const std::string hypo = numbered("hypo", i);
    const std::string hyper = numbered("hyper", i);
    fx.words.push_back(hypo);
    fx.vectors.row(row++) = x;
    fx.words.push_back(hyper);
    fx.vectors.row(row++) = y;
    fx.relations.push_back({hypo, hyper, Relation::hypernym});

    for (std::size_t s = 0; s < options.distractors; ++s) {
      Vector u = gaussian_row(d, rng);
      u -= u.dot(x) * x;
      u.normalize();
      const double phi = angle(rng);
      const std::string syn = numbered("syn", i) + "_" + std::to_string(s);
      fx.words.push_back(syn);
      fx.vectors.row(row++) = std::cos(phi) * x + std::sin(phi) * u;
      fx.relations.push_back({hypo, syn, Relation::synonym});
    }
  }
  for (std::size_t f = 0; f < options.filler; ++f) {
    fx.words.push_back(numbered("filler", f));
    fx.vectors.row(row++) = unit_row(d, rng);
  }
  return fx;
}

void write_synthetic(const SynthFixture& fixture, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_embeddings_text(fixture.table(), dir / "embeddings.txt");
  write_relations(fixture.relations, dir / "relations.tsv");
}

}  // namespace hyperproj

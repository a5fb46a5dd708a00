#include "hyperproj/projection.hpp"

#include <cmath>
#include <string>

#include "hyperproj/error.hpp"

namespace hyperproj {

std::optional<RegularizerKind> parse_regularizer(std::string_view name) {
  if (name == "none") return RegularizerKind::none;
  if (name == "asym") return RegularizerKind::asymmetric_plain;
  if (name == "asym-reproj") return RegularizerKind::asymmetric_reproj;
  if (name == "neighbor") return RegularizerKind::neighbor_plain;
  if (name == "neighbor-reproj") return RegularizerKind::neighbor_reproj;
  return std::nullopt;
}

std::string_view regularizer_name(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::none: return "none";
    case RegularizerKind::asymmetric_plain: return "asym";
    case RegularizerKind::asymmetric_reproj: return "asym-reproj";
    case RegularizerKind::neighbor_plain: return "neighbor";
    case RegularizerKind::neighbor_reproj: return "neighbor-reproj";
  }
  return "none";
}

Vector Projection::apply(const Vector& x) const {
  Vector out = x * weights;
  if (affine()) out += bias;
  return out;
}

Matrix Projection::apply(const Matrix& x) const {
  Matrix out = x * weights;
  if (affine()) out.rowwise() += bias;
  return out;
}

namespace {

void check_square(const Projection& phi) {
  if (phi.weights.rows() != phi.weights.cols() || phi.weights.rows() == 0) {
    throw InputError("projection matrix must be square and non-empty");
  }
  if (phi.affine() && phi.bias.size() != phi.weights.cols()) {
    throw InputError("projection bias has the wrong dimension");
  }
}

void check_rows(const Projection& phi, const Matrix& m, const char* name) {
  if (m.rows() == 0) throw InputError(std::string("empty batch (") + name + ")");
  if (m.cols() != phi.weights.rows()) {
    throw InputError(std::string("batch ") + name + " has dimension " + std::to_string(m.cols()) +
                     ", projection has " + std::to_string(phi.weights.rows()));
  }
}

void check_aligned(const Matrix& a, const Matrix& b, const char* name) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError(std::string("batch ") + name + " is not aligned with x");
  }
}

// Per-example scores s_i = sim(q_i, z_i) and their derivatives ds_i/dq_i.
struct Scores {
  Eigen::VectorXd s;
  Matrix ds_dq;
};

Scores score_rows(const Matrix& q, const Matrix& z, Similarity similarity, bool want_derivative) {
  Scores out;
  if (similarity == Similarity::dot) {
    out.s = q.cwiseProduct(z).rowwise().sum();
    if (want_derivative) out.ds_dq = z;
    return out;
  }
  const Eigen::Index n = q.rows();
  out.s.resize(n);
  if (want_derivative) out.ds_dq = Matrix::Zero(n, q.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double qn = q.row(i).norm();
    const double zn = z.row(i).norm();
    if (qn == 0.0 || zn == 0.0) {
      out.s[i] = 0.0;
      continue;
    }
    const double s = q.row(i).dot(z.row(i)) / (qn * zn);
    out.s[i] = s;
    if (want_derivative) out.ds_dq.row(i) = z.row(i) / (qn * zn) - (s / (qn * qn)) * q.row(i);
  }
  return out;
}

// Mean of squared scores between the (re-)projected x and z, plus the
// gradient when requested.
double squared_score_term(const Projection& phi, const Matrix& x, const Matrix& z, bool reproject,
                          Similarity similarity, Projection* grad) {
  const Matrix p = phi.apply(x);
  const Matrix q = reproject ? phi.apply(p) : p;
  const Scores sc = score_rows(q, z, similarity, grad != nullptr);
  const double n = static_cast<double>(x.rows());
  const double value = sc.s.squaredNorm() / n;
  if (grad != nullptr) {
    // dL/dq_i = (2/n) s_i ds_i/dq_i
    const Matrix g = (2.0 / n) * (sc.s.asDiagonal() * sc.ds_dq);
    if (reproject) {
      const Matrix h = g * phi.weights.transpose();  // dL/dp
      grad->weights = p.transpose() * g + x.transpose() * h;
      if (phi.affine()) grad->bias = g.colwise().sum() + h.colwise().sum();
    } else {
      grad->weights = x.transpose() * g;
      if (phi.affine()) grad->bias = g.colwise().sum();
    }
  }
  return value;
}

double baseline_term(const Projection& phi, const Matrix& x, const Matrix& y, Projection* grad) {
  const Matrix r = phi.apply(x) - y;
  const double n = static_cast<double>(x.rows());
  if (grad != nullptr) {
    grad->weights = (2.0 / n) * (x.transpose() * r);
    if (phi.affine()) grad->bias = (2.0 / n) * r.colwise().sum();
  }
  return r.squaredNorm() / n;
}

double regularizer_term(const Projection& phi, const Batch& batch, const Objective& objective,
                        Projection* grad) {
  const bool reproject = reprojects(objective.kind);
  if (uses_negatives(objective.kind)) {
    return squared_score_term(phi, batch.x, *batch.z, reproject, objective.similarity, grad);
  }
  return squared_score_term(phi, batch.x, batch.x, reproject, objective.similarity, grad);
}

void check_batch(const Projection& phi, const Batch& batch, const Objective& objective) {
  check_square(phi);
  check_rows(phi, batch.x, "x");
  check_aligned(batch.x, batch.y, "y");
  if (uses_negatives(objective.kind)) {
    if (batch.z == nullptr) throw InputError("neighbor regularizer requires negative samples z");
    check_aligned(batch.x, *batch.z, "z");
  }
  if (!(objective.lambda >= 0.0) || !std::isfinite(objective.lambda)) {
    throw InputError("lambda must be finite and non-negative");
  }
}

bool regularized(const Objective& objective) {
  return objective.kind != RegularizerKind::none && objective.lambda != 0.0;
}

}  // namespace

double loss_baseline(const Projection& phi, const Matrix& x, const Matrix& y) {
  check_square(phi);
  check_rows(phi, x, "x");
  check_aligned(x, y, "y");
  return baseline_term(phi, x, y, nullptr);
}

double reg_asymmetric(const Projection& phi, const Matrix& x, bool reproject, Similarity similarity) {
  check_square(phi);
  check_rows(phi, x, "x");
  return squared_score_term(phi, x, x, reproject, similarity, nullptr);
}

double reg_neighbor(const Projection& phi, const Matrix& x, const Matrix& z, bool reproject,
                    Similarity similarity) {
  check_square(phi);
  check_rows(phi, x, "x");
  check_aligned(x, z, "z");
  return squared_score_term(phi, x, z, reproject, similarity, nullptr);
}

LossTerms total_loss(const Projection& phi, const Batch& batch, const Objective& objective) {
  check_batch(phi, batch, objective);
  LossTerms terms;
  terms.baseline = baseline_term(phi, batch.x, batch.y, nullptr);
  terms.total = terms.baseline;
  if (objective.kind != RegularizerKind::none) {
    terms.regularizer = regularizer_term(phi, batch, objective, nullptr);
    if (regularized(objective)) terms.total += objective.lambda * terms.regularizer;
  }
  return terms;
}

LossAndGradient loss_and_gradient(const Projection& phi, const Batch& batch, const Objective& objective) {
  check_batch(phi, batch, objective);
  LossAndGradient out;
  out.loss.baseline = baseline_term(phi, batch.x, batch.y, &out.gradient);
  out.loss.total = out.loss.baseline;
  if (objective.kind == RegularizerKind::none) return out;
  if (!regularized(objective)) {
    out.loss.regularizer = regularizer_term(phi, batch, objective, nullptr);
    return out;
  }
  Projection reg_grad;
  out.loss.regularizer = regularizer_term(phi, batch, objective, &reg_grad);
  out.loss.total += objective.lambda * out.loss.regularizer;
  out.gradient.weights += objective.lambda * reg_grad.weights;
  if (phi.affine()) out.gradient.bias += objective.lambda * reg_grad.bias;
  return out;
}

void ProjectionModel::validate() const {
  if (projections.empty()) throw InputError("model has no projections");
  if (projections.size() != clusters.k()) {
    throw InputError("model has " + std::to_string(projections.size()) + " projections but " +
                     std::to_string(clusters.k()) + " clusters");
  }
  const std::size_t d = dim();
  if (clusters.dim() != d) throw InputError("centroid dimension does not match the projections");
  if (!clusters.centroids.allFinite()) throw InputError("model centroids contain non-finite values");
  const bool bias = affine();
  for (const auto& p : projections) {
    check_square(p);
    if (p.dim() != d) throw InputError("projection matrices differ in dimension");
    if (p.affine() != bias) throw InputError("projections disagree on the bias term");
    if (!p.weights.allFinite() || (bias && !p.bias.allFinite())) {
      throw InputError("projection contains non-finite values");
    }
  }
}

Vector predict(const ProjectionModel& model, const Vector& x, std::size_t cluster) {
  if (cluster >= model.k()) {
    throw InputError("cluster " + std::to_string(cluster) + " out of range (k = " + std::to_string(model.k()) + ")");
  }
  if (static_cast<std::size_t>(x.size()) != model.dim()) {
    throw InputError("predict: vector has dimension " + std::to_string(x.size()) + ", model has " +
                     std::to_string(model.dim()));
  }
  return model.projections[cluster].apply(x);
}

}  // namespace hyperproj

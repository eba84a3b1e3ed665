#include "tva/regression.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tva/error.hpp"
#include "tva/kernels.hpp"

namespace tva::regression {
namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kRidgeScale = 1e-8;
// Keeps evidence updates finite on exactly-fit or all-zero data.
constexpr double kMinPrecision = 1e-10;
constexpr double kMaxPrecision = 1e10;

void checkResponses(const DesignMatrix& X, std::span<const double> t) {
  if (t.size() != X.rows()) {
    throw ValidationError(fmt::format("response length {} does not match {} design rows", t.size(), X.rows()));
  }
  for (double v : t) {
    if (!std::isfinite(v)) throw ValidationError("response vector contains a non-finite value");
  }
}

Eigen::MatrixXd gram(const DesignMatrix& X) {
  const auto m = static_cast<Eigen::Index>(X.cols());
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = simd::dot(X.column(static_cast<std::size_t>(i)), X.column(static_cast<std::size_t>(j)));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::VectorXd moments(const DesignMatrix& X, std::span<const double> t) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(X.cols()));
  for (std::size_t i = 0; i < X.cols(); ++i) b(static_cast<Eigen::Index>(i)) = simd::dot(X.column(i), t);
  return b;
}

std::vector<double> fitted(const DesignMatrix& X, std::span<const double> w) {
  std::vector<double> y(X.rows(), 0.0);
  for (std::size_t c = 0; c < X.cols(); ++c) {
    const auto col = X.column(c);
    for (std::size_t r = 0; r < X.rows(); ++r) y[r] += w[c] * col[r];
  }
  return y;
}

std::vector<double> toStd(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

DesignMatrix::DesignMatrix(std::vector<std::string> columnNames)
    : names_(std::move(columnNames)), columns_(names_.size()) {
  if (names_.empty()) throw ValidationError("design matrix needs at least one column");
}

DesignMatrix::DesignMatrix(std::vector<std::string> columnNames, const std::vector<std::vector<double>>& rows)
    : DesignMatrix(std::move(columnNames)) {
  for (const auto& r : rows) appendRow(r);
}

void DesignMatrix::appendRow(std::span<const double> row) {
  if (row.size() != cols()) {
    throw ValidationError(fmt::format("design row {} has width {}, expected {}", rows_, row.size(), cols()));
  }
  if (row[0] != 1.0) throw ValidationError(fmt::format("design row {}: intercept entry must be 1", rows_));
  for (double v : row) {
    if (!std::isfinite(v)) throw ValidationError(fmt::format("design row {} contains a non-finite value", rows_));
  }
  for (std::size_t c = 0; c < cols(); ++c) columns_[c].push_back(row[c]);
  ++rows_;
}

std::vector<double> DesignMatrix::row(std::size_t r) const {
  std::vector<double> out(cols());
  for (std::size_t c = 0; c < cols(); ++c) out[c] = columns_[c][r];
  return out;
}

DesignMatrix DesignMatrix::selectRows(std::span<const std::size_t> indices) const {
  DesignMatrix out(names_);
  for (auto& col : out.columns_) col.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= rows_) throw ValidationError(fmt::format("row index {} out of range", idx));
    for (std::size_t c = 0; c < cols(); ++c) out.columns_[c].push_back(columns_[c][idx]);
  }
  out.rows_ = indices.size();
  return out;
}

double errorFunction(const DesignMatrix& X, std::span<const double> t, std::span<const double> w) {
  checkResponses(X, t);
  if (w.size() != X.cols()) {
    throw ValidationError(fmt::format("weight length {} does not match {} design columns", w.size(), X.cols()));
  }
  const auto y = fitted(X, w);
  return 0.5 * simd::sumSquaredDiff(y, t);
}

Model fitMra(const DesignMatrix& X, std::span<const double> t) {
  checkResponses(X, t);
  const std::size_t n = X.rows();
  const std::size_t m = X.cols();
  if (n < m) throw ValidationError(fmt::format("regression needs N >= M, got N = {}, M = {}", n, m));

  const Eigen::MatrixXd g = gram(X);
  const Eigen::VectorXd b = moments(X, t);
  const double trace = g.trace();
  if (!(trace > 0.0)) throw ValidationError("design matrix is all zeros");

  Model model;
  model.columnNames = X.columnNames();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  bool wellPosed = lmin > 0.0 && lmax / lmin <= kMaxCondition;

  Eigen::VectorXd w;
  if (wellPosed) {
    const Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() == Eigen::Success) {
      w = llt.solve(b);
      w += llt.solve(b - g * w);  // one refinement step
    } else {
      wellPosed = false;
    }
  }
  if (!wellPosed) {
    model.ridgeLambda = kRidgeScale * trace / static_cast<double>(m);
    const Eigen::MatrixXd reg = g + model.ridgeLambda * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    w = reg.ldlt().solve(b);
  }
  model.weights = toStd(w);
  model.trainingError = errorFunction(X, t, model.weights);
  return model;
}

Prediction predict(const Model& m, std::span<const double> x) {
  if (!m.trained()) throw ValidationError("prediction requested from an untrained model");
  if (x.size() != m.weights.size()) {
    throw ValidationError(fmt::format("feature vector width {} does not match model width {}", x.size(), m.weights.size()));
  }
  const double raw = simd::dot(m.weights, x);
  return Prediction{std::max(0.0, raw), raw};
}

Model fitBayesianRidge(const DesignMatrix& X, std::span<const double> t, const BayesianRidgeConfig& config) {
  checkResponses(X, t);
  if (!(config.alpha > 0.0) || !(config.beta > 0.0)) {
    throw ValidationError("Bayesian ridge: alpha and beta must be > 0");
  }
  if (config.iterations < 0) throw ValidationError("Bayesian ridge: iterations must be >= 0");
  if (X.rows() < 1) throw ValidationError("Bayesian ridge: needs at least one observation");

  const Eigen::MatrixXd g = gram(X);
  const Eigen::VectorXd b = moments(X, t);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd lambdas = eig.eigenvalues().cwiseMax(0.0);
  const auto identity = Eigen::MatrixXd::Identity(g.rows(), g.cols());
  const double n = static_cast<double>(X.rows());

  double alpha = config.alpha;
  double beta = config.beta;
  auto posteriorMean = [&] {
    const Eigen::MatrixXd a = alpha * identity + beta * g;
    return Eigen::VectorXd(beta * a.ldlt().solve(b));
  };

  Eigen::VectorXd mean = posteriorMean();
  for (int it = 0; it < config.iterations; ++it) {
    double gamma = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) gamma += beta * lambdas(i) / (alpha + beta * lambdas(i));
    const double norm2 = mean.squaredNorm();
    const auto y = fitted(X, toStd(mean));
    const double sse = simd::sumSquaredDiff(y, t);
    if (norm2 > 0.0) alpha = std::clamp(gamma / norm2, kMinPrecision, kMaxPrecision);
    beta = sse > 0.0 ? std::clamp((n - gamma) / sse, kMinPrecision, kMaxPrecision) : kMaxPrecision;
    mean = posteriorMean();
  }

  Model model;
  model.columnNames = X.columnNames();
  model.weights = toStd(mean);
  model.ridgeLambda = alpha / beta;
  model.trainingError = errorFunction(X, t, model.weights);
  return model;
}

double baselineMean(std::span<const double> history) {
  if (history.empty()) throw ValidationError("baseline mean of an empty history");
  return simd::sum(history) / static_cast<double>(history.size());
}

double baselineStatic(const Tactic& t, EstimateKind kind) noexcept {
  return kind == EstimateKind::Latency ? t.staticLatency : t.staticCost;
}

}  // namespace tva::regression

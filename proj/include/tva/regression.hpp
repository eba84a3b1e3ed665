#pragma once

// Run-time tactic latency/cost prediction by multiple regression, plus the
// comparison baselines (Bayesian ridge, running mean, static value).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tva/core.hpp"

namespace tva::regression {

/// N observation rows of width M. Column 0 is the intercept and is
/// identically 1. Stored column-major so column products stay contiguous.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(std::vector<std::string> columnNames, const std::vector<std::vector<double>>& rows);
  explicit DesignMatrix(std::vector<std::string> columnNames);

  void appendRow(std::span<const double> row);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& columnNames() const noexcept { return names_; }

  std::span<const double> column(std::size_t c) const {
    return std::span<const double>(columns_[c]);
  }
  double at(std::size_t r, std::size_t c) const { return columns_[c][r]; }
  std::vector<double> row(std::size_t r) const;

  /// Subset of rows, in the given order.
  DesignMatrix selectRows(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::size_t rows_ = 0;
};

struct Model {
  std::vector<double> weights;
  double ridgeLambda = 0.0;  // 0 for a plain least-squares solve
  double trainingError = 0.0;
  std::vector<std::string> columnNames;

  bool trained() const noexcept { return !weights.empty(); }
};

struct Prediction {
  double value = 0.0;  // clamped at 0
  double raw = 0.0;
};

/// E(w) = 1/2 * sum_n (w'x_n - t_n)^2.
double errorFunction(const DesignMatrix& X, std::span<const double> t, std::span<const double> w);

/// Least-squares weights solving X'X w = X't. Falls back to a small ridge
/// term (1e-8 * trace(X'X) / M) when X'X is singular or its condition number
/// exceeds 1e12.
Model fitMra(const DesignMatrix& X, std::span<const double> t);

Prediction predict(const Model& m, std::span<const double> x);

struct BayesianRidgeConfig {
  double alpha = 1.0;  // prior precision
  double beta = 1.0;   // noise precision
  int iterations = 10;
};

/// Posterior mean (alpha*I + beta*X'X)^-1 beta*X't with `iterations` evidence
/// fixed-point updates of alpha and beta.
Model fitBayesianRidge(const DesignMatrix& X, std::span<const double> t,
                       const BayesianRidgeConfig& config = {});

double baselineMean(std::span<const double> history);

enum class EstimateKind { Latency, Cost };

double baselineStatic(const Tactic& t, EstimateKind kind) noexcept;

}  // namespace tva::regression

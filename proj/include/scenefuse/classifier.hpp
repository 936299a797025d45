#pragma once

// L2-regularised logistic regression trained in the primal:
//
//     min_w  0.5 * ||w||^2 + C * sum_i log(1 + exp(-y_i * w.x_i))
//
// solved with a Newton method whose steps come from conjugate gradients and
// a backtracking line search. Multiclass problems use one-vs-rest; the cost
// C is picked by stratified k-fold cross-validation over a grid.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenefuse/labeled_dataset.hpp"

namespace scenefuse {

struct TrainingConfig {
  std::vector<double> c_grid = default_c_grid();
  int cv_folds = 5;
  /// Stop when ||grad f(w)|| <= tolerance * max(1, ||grad f(0)||).
  double tolerance = 1e-8;
  int max_iterations = 1000;
  /// Append a constant-1 feature; its weight is regularised like the others.
  bool fit_bias = true;
  /// Seed of the stratified fold shuffle.
  std::uint64_t seed = 42;

  static std::vector<double> default_c_grid();  // 1, 2, ..., 50
  void validate() const;
};

/// Parses "1..50", "1,5,10" or mixtures such as "0.5,1..4".
std::vector<double> parse_c_grid(std::string_view text);

/// Objective, gradient and Hessian-vector products of the binary problem on
/// an already augmented design matrix.
class LogisticObjective {
 public:
  LogisticObjective(const Eigen::MatrixXd& design, const Eigen::VectorXd& signs, double c);

  double value(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  /// H(w) v, with H = I + C X^T D X and D = diag(s_i (1 - s_i)), s_i = sigma(y_i w.x_i).
  Eigen::VectorXd hessian_times(const Eigen::VectorXd& w, const Eigen::VectorXd& v) const;

  Eigen::Index dim() const noexcept { return design_.cols(); }

 private:
  const Eigen::MatrixXd& design_;
  const Eigen::VectorXd& signs_;
  double c_;
};

struct BinaryFit {
  Eigen::VectorXd weights;  // length dim (+1 with fit_bias; bias last)
  int iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
};

/// Trains one binary model; `signs` holds +1/-1 per row of `features`.
/// `initial` (optional) warm-starts the solver and must have the augmented
/// length. Throws Error{Convergence} when max_iterations is exhausted and
/// Error{EmptyClass} when only one sign is present.
BinaryFit train_binary(const Eigen::MatrixXd& features, std::span<const int> signs, double c,
                       const TrainingConfig& config, const Eigen::VectorXd* initial = nullptr);

/// Mean cross-validation accuracy for every grid value, per fold.
struct CvTable {
  std::vector<double> c_values;
  int folds = 0;
  std::uint64_t seed = 0;
  /// accuracy[c_index][fold]
  std::vector<std::vector<double>> accuracy;

  double mean(std::size_t c_index) const;
  bool empty() const noexcept { return c_values.empty(); }
};

struct TrainedModel {
  Eigen::MatrixXd weights;  // class_count rows, dim (+1) columns
  double chosen_c = 1.0;
  int class_count = 0;
  int dim = 0;
  bool fit_bias = true;
  CvTable cv;

  /// w_k . [x, 1] for every class.
  Eigen::VectorXd scores(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// One binary model per class (class k against the rest).
TrainedModel train_ovr(const LabeledDataset& data, double c, const TrainingConfig& config);

/// Stratified cross-validated grid search over config.c_grid; ties go to the
/// smallest C. The winner is retrained on all of `data`.
TrainedModel grid_search(const LabeledDataset& data, const TrainingConfig& config);

/// Argmax of the class scores; ties resolve to the lowest class index.
int predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Fraction of rows predicted correctly. Throws on an empty dataset.
double score(const TrainedModel& model, const LabeledDataset& data);

/// Fold index per sample. Each class is shuffled with a seeded generator and
/// dealt round-robin, continuing where the previous class stopped so fold
/// sizes stay balanced. Throws when a present class has fewer than `folds`
/// samples.
std::vector<int> stratified_folds(std::span<const int> labels, int class_count, int folds, std::uint64_t seed);

/// Versioned binary model file ("SFLR").
void save_model(const TrainedModel& model, std::ostream& out);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(std::istream& in);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace scenefuse

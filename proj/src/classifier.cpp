#include "scenefuse/classifier.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "scenefuse/binary_io.hpp"
#include "scenefuse/error.hpp"

namespace scenefuse {
namespace {

constexpr char kModelMagic[4] = {'S', 'F', 'L', 'R'};
constexpr std::uint32_t kModelVersion = 1;

// log(1 + exp(-z)) without overflow.
double logistic_loss(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

// 1 / (1 + exp(z)) = 1 - sigma(z).
double sigmoid_complement(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

Eigen::MatrixXd augment(const Eigen::MatrixXd& features, bool fit_bias) {
  if (!fit_bias) return features;
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.leftCols(features.cols()) = features;
  design.col(features.cols()).setOnes();
  return design;
}

// Curvature weights D_ii = s_i (1 - s_i) at w.
Eigen::VectorXd curvature(const Eigen::MatrixXd& design, const Eigen::VectorXd& signs, const Eigen::VectorXd& w) {
  const Eigen::VectorXd margins = (design * w).cwiseProduct(signs);
  Eigen::VectorXd d(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    const double q = sigmoid_complement(margins[i]);
    d[i] = q * (1.0 - q);
  }
  return d;
}

Eigen::VectorXd apply_hessian(const Eigen::MatrixXd& design, const Eigen::VectorXd& d, double c,
                              const Eigen::VectorXd& v) {
  const Eigen::VectorXd xv = design * v;
  return v + c * (design.transpose() * d.cwiseProduct(xv));
}

// Newton-CG on an augmented design matrix with +-1 targets.
BinaryFit solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& signs, double c, const TrainingConfig& config,
                const Eigen::VectorXd* initial) {
  const LogisticObjective objective(design, signs, c);
  const Eigen::Index n = design.cols();

  BinaryFit fit;
  fit.weights = Eigen::VectorXd::Zero(n);
  if (initial != nullptr) {
    if (initial->size() != n) {
      throw Error(ErrorKind::DimensionMismatch, "initial weights have length " + std::to_string(initial->size()) +
                                                    ", expected " + std::to_string(n));
    }
    fit.weights = *initial;
  }

  const double reference = std::max(1.0, objective.gradient(Eigen::VectorXd::Zero(n)).norm());
  const double threshold = config.tolerance * reference;
  const int max_cg = static_cast<int>(std::max<Eigen::Index>(10, 2 * n));

  Eigen::VectorXd& w = fit.weights;
  double value = objective.value(w);
  for (int iteration = 0;; ++iteration) {
    const Eigen::VectorXd gradient = objective.gradient(w);
    const double gradient_norm = gradient.norm();
    fit.iterations = iteration;
    fit.gradient_norm = gradient_norm;
    fit.objective = value;
    if (gradient_norm <= threshold) return fit;
    if (iteration >= config.max_iterations) {
      std::ostringstream msg;
      msg << "logistic regression did not converge in " << config.max_iterations
          << " iterations (gradient norm " << gradient_norm << ", threshold " << threshold << ")";
      throw Error(ErrorKind::Convergence, msg.str());
    }

    // Inexact Newton step: CG on H s = -g with a forcing term that tightens
    // as the gradient shrinks.
    const Eigen::VectorXd d = curvature(design, signs, w);
    const double forcing = std::min(0.5, std::sqrt(gradient_norm / reference));
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd residual = -gradient;
    Eigen::VectorXd direction = residual;
    double rr = residual.squaredNorm();
    for (int k = 0; k < max_cg && std::sqrt(rr) > forcing * gradient_norm; ++k) {
      const Eigen::VectorXd hd = apply_hessian(design, d, c, direction);
      const double curvature_along = direction.dot(hd);
      if (curvature_along <= 0) break;  // cannot happen for H >= I, guards round-off
      const double alpha = rr / curvature_along;
      step += alpha * direction;
      residual -= alpha * hd;
      const double rr_next = residual.squaredNorm();
      direction = residual + (rr_next / rr) * direction;
      rr = rr_next;
    }

    const double slope = gradient.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd candidate = w + t * step;
      const double candidate_value = objective.value(candidate);
      if (candidate_value <= value + 1e-4 * t * slope) {
        w = candidate;
        value = candidate_value;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Near the optimum the predicted decrease drops below the resolution of
      // the objective; take the full Newton step when it does not increase f
      // beyond round-off.
      const Eigen::VectorXd candidate = w + step;
      const double candidate_value = objective.value(candidate);
      if (candidate_value <= value + 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value))) {
        w = candidate;
        value = candidate_value;
      } else {
        std::ostringstream msg;
        msg << "line search failed (gradient norm " << gradient_norm << ")";
        throw Error(ErrorKind::Convergence, msg.str());
      }
    }
  }
}

std::uint64_t bounded_draw(std::mt19937_64& engine, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = engine();
  } while (r >= limit);
  return r % bound;
}

std::vector<int> class_signs(std::span<const int> labels, int positive) {
  std::vector<int> signs(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) signs[i] = labels[i] == positive ? 1 : -1;
  return signs;
}

Eigen::VectorXd to_vector(std::span<const int> signs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(signs.size()));
  for (std::size_t i = 0; i < signs.size(); ++i) v[static_cast<Eigen::Index>(i)] = signs[i];
  return v;
}

// OVR on a prepared design matrix, optionally warm-started per class.
Eigen::MatrixXd train_ovr_design(const Eigen::MatrixXd& design, std::span<const int> labels, int class_count, double c,
                                 const TrainingConfig& config, const Eigen::MatrixXd* warm) {
  std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
  for (int label : labels) ++counts[static_cast<std::size_t>(label)];
  for (int k = 0; k < class_count; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw Error(ErrorKind::EmptyClass, "class " + std::to_string(k) + " has no training samples");
    }
    if (counts[static_cast<std::size_t>(k)] == static_cast<int>(labels.size())) {
      throw Error(ErrorKind::EmptyClass, "class " + std::to_string(k) + " is the only class present");
    }
  }

  Eigen::MatrixXd weights(class_count, design.cols());
  for (int k = 0; k < class_count; ++k) {
    const Eigen::VectorXd signs = to_vector(class_signs(labels, k));
    Eigen::VectorXd init;
    if (warm != nullptr) init = warm->row(k).transpose();
    try {
      weights.row(k) = solve(design, signs, c, config, warm ? &init : nullptr).weights.transpose();
    } catch (const Error& e) {
      throw Error(e.kind(), "class " + std::to_string(k) + ": " + e.what());
    }
  }
  return weights;
}

int argmax_row(const Eigen::MatrixXd& weights, const Eigen::Ref<const Eigen::RowVectorXd>& augmented_x) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    const double s = weights.row(k).dot(augmented_x);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(k);
    }
  }
  return best;
}

}  // namespace

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw Error(ErrorKind::DimensionMismatch, "dataset has " + std::to_string(features.rows()) + " feature rows and " +
                                                  std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) {
      throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                                  " outside 0.." + std::to_string(class_count - 1));
    }
  }
  if (!features.allFinite()) {
    throw Error(ErrorKind::NonFinite, "dataset contains non-finite features");
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.class_count = class_count;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

std::vector<double> TrainingConfig::default_c_grid() {
  std::vector<double> grid;
  for (int c = 1; c <= 50; ++c) grid.push_back(c);
  return grid;
}

void TrainingConfig::validate() const {
  if (c_grid.empty()) throw Error(ErrorKind::InvalidArgument, "C grid is empty");
  for (double c : c_grid) {
    if (!(c > 0) || !std::isfinite(c)) throw Error(ErrorKind::InvalidArgument, "C values must be positive and finite");
  }
  if (cv_folds < 2) throw Error(ErrorKind::InvalidArgument, "cv_folds must be >= 2");
  if (!(tolerance > 0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  if (max_iterations < 1) throw Error(ErrorKind::InvalidArgument, "max_iterations must be >= 1");
}

std::vector<double> parse_c_grid(std::string_view text) {
  std::vector<double> grid;
  auto number = [&](std::string_view s) {
    std::string owned(s);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(owned, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != owned.size()) {
      throw Error(ErrorKind::InvalidArgument, "bad C grid entry '" + owned + "'");
    }
    return v;
  };
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (const auto dots = item.find(".."); dots != std::string_view::npos) {
      const double lo = number(item.substr(0, dots));
      const double hi = number(item.substr(dots + 2));
      if (hi < lo) throw Error(ErrorKind::InvalidArgument, "empty C range '" + std::string(item) + "'");
      for (double c = lo; c <= hi + 1e-9; c += 1.0) grid.push_back(c);
    } else {
      grid.push_back(number(item));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (double c : grid) {
    if (!(c > 0)) throw Error(ErrorKind::InvalidArgument, "C values must be positive");
  }
  return grid;
}

LogisticObjective::LogisticObjective(const Eigen::MatrixXd& design, const Eigen::VectorXd& signs, double c)
    : design_(design), signs_(signs), c_(c) {
  if (design.rows() != signs.size()) {
    throw Error(ErrorKind::DimensionMismatch, "objective: rows and targets differ in length");
  }
}

double LogisticObjective::value(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd margins = (design_ * w).cwiseProduct(signs_);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += logistic_loss(margins[i]);
  return 0.5 * w.squaredNorm() + c_ * loss;
}

Eigen::VectorXd LogisticObjective::gradient(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd margins = (design_ * w).cwiseProduct(signs_);
  Eigen::VectorXd coefficients(margins.size());
  for (Eigen::Index i = 0; i < margins.size(); ++i) coefficients[i] = -sigmoid_complement(margins[i]) * signs_[i];
  return w + c_ * (design_.transpose() * coefficients);
}

Eigen::VectorXd LogisticObjective::hessian_times(const Eigen::VectorXd& w, const Eigen::VectorXd& v) const {
  return apply_hessian(design_, curvature(design_, signs_, w), c_, v);
}

BinaryFit train_binary(const Eigen::MatrixXd& features, std::span<const int> signs, double c,
                       const TrainingConfig& config, const Eigen::VectorXd* initial) {
  if (static_cast<std::size_t>(features.rows()) != signs.size()) {
    throw Error(ErrorKind::DimensionMismatch, "train_binary: rows and labels differ in length");
  }
  if (!(c > 0)) throw Error(ErrorKind::InvalidArgument, "train_binary: C must be positive");
  if (!features.allFinite()) throw Error(ErrorKind::NonFinite, "train_binary: non-finite features");
  bool positive = false, negative = false;
  for (int s : signs) {
    if (s == 1) positive = true;
    else if (s == -1) negative = true;
    else throw Error(ErrorKind::InvalidArgument, "train_binary: labels must be +1 or -1");
  }
  if (!positive || !negative) {
    throw Error(ErrorKind::EmptyClass, "train_binary: need at least one example of each sign");
  }
  const Eigen::MatrixXd design = augment(features, config.fit_bias);
  return solve(design, to_vector(signs), c, config, initial);
}

double CvTable::mean(std::size_t c_index) const {
  const auto& row = accuracy.at(c_index);
  double sum = 0.0;
  for (double a : row) sum += a;
  return row.empty() ? 0.0 : sum / static_cast<double>(row.size());
}

Eigen::VectorXd TrainedModel::scores(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim) {
    throw Error(ErrorKind::DimensionMismatch, "feature dim " + std::to_string(x.size()) + " does not match model dim " +
                                                  std::to_string(dim));
  }
  Eigen::VectorXd augmented(weights.cols());
  augmented.head(dim) = x;
  if (fit_bias) augmented[dim] = 1.0;
  return weights * augmented;
}

TrainedModel train_ovr(const LabeledDataset& data, double c, const TrainingConfig& config) {
  data.validate();
  if (data.class_count < 2) throw Error(ErrorKind::InvalidArgument, "one-vs-rest needs at least two classes");
  if (!(c > 0)) throw Error(ErrorKind::InvalidArgument, "C must be positive");
  const Eigen::MatrixXd design = augment(data.features, config.fit_bias);

  TrainedModel model;
  model.weights = train_ovr_design(design, data.labels, data.class_count, c, config, nullptr);
  model.chosen_c = c;
  model.class_count = data.class_count;
  model.dim = static_cast<int>(data.dim());
  model.fit_bias = config.fit_bias;
  model.cv.seed = config.seed;
  return model;
}

std::vector<int> stratified_folds(std::span<const int> labels, int class_count, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::InvalidArgument, "need at least two folds");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < labels.size(); ++i) members.at(static_cast<std::size_t>(labels[i])).push_back(i);

  std::mt19937_64 engine(seed);
  std::vector<int> assignment(labels.size(), -1);
  int next_fold = 0;
  for (int k = 0; k < class_count; ++k) {
    auto& rows = members[static_cast<std::size_t>(k)];
    if (rows.empty()) continue;
    if (static_cast<int>(rows.size()) < folds) {
      throw Error(ErrorKind::InvalidArgument, "class " + std::to_string(k) + " has " + std::to_string(rows.size()) +
                                                  " samples, fewer than the " + std::to_string(folds) + " folds");
    }
    for (std::size_t i = rows.size(); i > 1; --i) {
      std::swap(rows[i - 1], rows[bounded_draw(engine, i)]);
    }
    for (std::size_t row : rows) {
      assignment[row] = next_fold;
      next_fold = (next_fold + 1) % folds;
    }
  }
  return assignment;
}

TrainedModel grid_search(const LabeledDataset& data, const TrainingConfig& config) {
  config.validate();
  data.validate();
  const std::vector<int> fold_of = stratified_folds(data.labels, data.class_count, config.cv_folds, config.seed);

  CvTable table;
  table.c_values = config.c_grid;
  table.folds = config.cv_folds;
  table.seed = config.seed;
  table.accuracy.assign(config.c_grid.size(), std::vector<double>(static_cast<std::size_t>(config.cv_folds), 0.0));

  for (int fold = 0; fold < config.cv_folds; ++fold) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == fold ? test_rows : train_rows).push_back(i);
    const LabeledDataset train = data.subset(train_rows);
    const LabeledDataset test = data.subset(test_rows);
    const Eigen::MatrixXd design = augment(train.features, config.fit_bias);
    const Eigen::MatrixXd test_design = augment(test.features, config.fit_bias);

    // Successive grid points start from the previous optimum; the objective
    // is strictly convex so the start only affects iteration counts.
    Eigen::MatrixXd warm;
    for (std::size_t ci = 0; ci < config.c_grid.size(); ++ci) {
      Eigen::MatrixXd weights =
          train_ovr_design(design, train.labels, data.class_count, config.c_grid[ci], config, ci ? &warm : nullptr);
      std::size_t correct = 0;
      for (Eigen::Index r = 0; r < test_design.rows(); ++r) {
        if (argmax_row(weights, test_design.row(r)) == test.labels[static_cast<std::size_t>(r)]) ++correct;
      }
      table.accuracy[ci][static_cast<std::size_t>(fold)] =
          static_cast<double>(correct) / static_cast<double>(test_design.rows());
      warm = std::move(weights);
    }
  }

  std::size_t best = 0;
  for (std::size_t ci = 1; ci < table.c_values.size(); ++ci) {
    const double m = table.mean(ci), bm = table.mean(best);
    if (m > bm || (m == bm && table.c_values[ci] < table.c_values[best])) best = ci;
  }

  TrainedModel model = train_ovr(data, table.c_values[best], config);
  model.cv = std::move(table);
  return model;
}

int predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::VectorXd s = model.scores(x);
  int best = 0;
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    if (s[k] > s[best]) best = static_cast<int>(k);
  }
  return best;
}

double score(const TrainedModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw Error(ErrorKind::InvalidArgument, "cannot score an empty dataset");
  if (data.dim() != model.dim) {
    throw Error(ErrorKind::DimensionMismatch, "dataset dim " + std::to_string(data.dim()) + " does not match model dim " +
                                                  std::to_string(model.dim));
  }
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    if (predict(model, data.features.row(r).transpose()) == data.labels[static_cast<std::size_t>(r)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void save_model(const TrainedModel& model, std::ostream& out) {
  using namespace binary;
  out.write(kModelMagic, sizeof(kModelMagic));
  write_u32(out, kModelVersion);
  write_u32(out, static_cast<std::uint32_t>(model.class_count));
  write_u32(out, static_cast<std::uint32_t>(model.dim));
  write_u8(out, model.fit_bias ? 1 : 0);
  write_f64(out, model.chosen_c);
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
    for (Eigen::Index j = 0; j < model.weights.cols(); ++j) write_f64(out, model.weights(k, j));
  }
  write_u64(out, model.cv.seed);
  write_u32(out, static_cast<std::uint32_t>(model.cv.c_values.size()));
  write_u32(out, static_cast<std::uint32_t>(model.cv.folds));
  for (double c : model.cv.c_values) write_f64(out, c);
  for (const auto& row : model.cv.accuracy) {
    for (double a : row) write_f64(out, a);
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing model");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write model " + path.string());
  save_model(model, out);
}

TrainedModel load_model(std::istream& in) {
  using namespace binary;
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != 4) throw Error(ErrorKind::Truncated, "truncated model header");
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kModelMagic))) {
    throw Error(ErrorKind::Format, "not a model file (bad magic)");
  }
  const std::uint32_t version = read_u32(in, "model version");
  if (version != kModelVersion) throw Error(ErrorKind::Format, "unsupported model version " + std::to_string(version));

  TrainedModel model;
  const std::uint32_t classes = read_u32(in, "class count");
  const std::uint32_t dim = read_u32(in, "dim");
  const std::uint8_t bias = read_u8(in, "bias flag");
  if (classes < 2 || classes > (1u << 20) || dim > (1u << 26) || bias > 1) {
    throw Error(ErrorKind::Format, "implausible model header");
  }
  model.class_count = static_cast<int>(classes);
  model.dim = static_cast<int>(dim);
  model.fit_bias = bias == 1;
  model.chosen_c = read_f64(in, "chosen C");
  model.weights.resize(classes, dim + (model.fit_bias ? 1 : 0));
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
    for (Eigen::Index j = 0; j < model.weights.cols(); ++j) model.weights(k, j) = read_f64(in, "weights");
  }
  model.cv.seed = read_u64(in, "cv seed");
  const std::uint32_t grid = read_u32(in, "cv grid size");
  const std::uint32_t folds = read_u32(in, "cv folds");
  if (grid > (1u << 20) || folds > (1u << 16)) throw Error(ErrorKind::Format, "implausible cv table");
  model.cv.folds = static_cast<int>(folds);
  model.cv.c_values.resize(grid);
  for (double& c : model.cv.c_values) c = read_f64(in, "cv C values");
  model.cv.accuracy.assign(grid, std::vector<double>(folds));
  for (auto& row : model.cv.accuracy) {
    for (double& a : row) a = read_f64(in, "cv accuracy");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::Format, "trailing bytes after model");
  return model;
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open model " + path.string());
  return load_model(in);
}

}  // namespace scenefuse

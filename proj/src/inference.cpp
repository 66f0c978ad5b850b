#include "gnngp/inference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gnngp {

namespace {

Matrix gather(const Matrix& m, std::span<const Index> rows, std::span<const Index> cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows.size(); ++i)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

void check_rows(std::span<const Index> rows, Index n, const char* what) {
  for (Index r : rows)
    if (r < 0 || r >= n) throw InputError(std::string(what) + ": index out of range");
}

double condition_estimate(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  if (ev.size() == 0) return 0.0;
  const double lo = ev.minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

Eigen::LLT<Matrix> factor_spd(Matrix m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * m.trace() / static_cast<double>(std::max<Index>(m.rows(), 1));
  Matrix shifted = m;
  shifted.diagonal().array() += jitter;
  llt.compute(shifted);
  if (llt.info() == Eigen::Success) return llt;
  const double cond = condition_estimate(m);
  throw NumericalError(std::string(what) + ": Cholesky factorization failed (condition estimate " +
                           std::to_string(cond) + ")",
                       cond);
}

void require_positive_nugget(double eps, const char* what) {
  if (!(eps > 0.0)) throw InputError(std::string(what) + ": nugget must be positive");
}

}  // namespace

void SplitIndices::validate(Index n_nodes) const {
  std::vector<char> seen(static_cast<std::size_t>(std::max<Index>(n_nodes, 0)), 0);
  auto mark = [&](const std::vector<Index>& part, const char* name) {
    for (Index i : part) {
      if (i < 0 || i >= n_nodes)
        throw InputError(std::string("split '") + name + "' index " + std::to_string(i) +
                         " out of range [0, " + std::to_string(n_nodes) + ")");
      if (seen[static_cast<std::size_t>(i)])
        throw InputError(std::string("split '") + name + "' repeats or overlaps at node " +
                         std::to_string(i));
      seen[static_cast<std::size_t>(i)] = 1;
    }
  };
  mark(train, "train");
  mark(val, "val");
  mark(test, "test");
}

Targets Targets::classification(std::vector<int> labels) {
  Targets t;
  t.task = Task::classification;
  int top = -1;
  for (int l : labels) {
    if (l < 0) throw InputError("class labels must be nonnegative");
    top = std::max(top, l);
  }
  t.n_classes = top + 1;
  t.labels = std::move(labels);
  return t;
}

Targets Targets::regression(Vector values) {
  Targets t;
  t.task = Task::regression;
  t.values = std::move(values);
  return t;
}

Index Targets::size() const {
  return task == Task::classification ? static_cast<Index>(labels.size()) : values.size();
}

Matrix Targets::encode(std::span<const Index> rows) const {
  check_rows(rows, size(), "Targets::encode");
  const auto n = static_cast<Index>(rows.size());
  if (task == Task::regression) {
    Matrix y(n, 1);
    for (Index i = 0; i < n; ++i) y(i, 0) = values(rows[static_cast<std::size_t>(i)]);
    return y;
  }
  Matrix y = Matrix::Zero(n, n_classes);
  for (Index i = 0; i < n; ++i) y(i, labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])]) = 1.0;
  return y;
}

double Targets::score(const Matrix& mean, std::span<const Index> rows) const {
  check_rows(rows, size(), "Targets::score");
  if (mean.rows() != static_cast<Index>(rows.size()))
    throw InputError("Targets::score: prediction count does not match rows");
  if (task == Task::classification) {
    const std::vector<int> pred = classify_onehot(mean);
    std::vector<int> truth;
    truth.reserve(rows.size());
    for (Index r : rows) truth.push_back(labels[static_cast<std::size_t>(r)]);
    return micro_f1(pred, truth);
  }
  std::vector<double> pred(mean.col(0).data(), mean.col(0).data() + mean.rows());
  std::vector<double> truth;
  truth.reserve(rows.size());
  for (Index r : rows) truth.push_back(values(r));
  return r2(pred, truth);
}

PosteriorResult posterior_mean_exact(const DenseKernel& k, std::span<const Index> train,
                                     std::span<const Index> predict, const Matrix& y_train,
                                     double eps) {
  if (k.rows() != k.cols()) throw InputError("posterior_mean_exact: kernel must be square");
  check_rows(train, k.rows(), "posterior_mean_exact");
  check_rows(predict, k.rows(), "posterior_mean_exact");
  if (y_train.rows() != static_cast<Index>(train.size()))
    throw InputError("posterior_mean_exact: y_train rows do not match the training set");
  if (eps < 0.0) throw InputError("posterior_mean_exact: nugget must be nonnegative");
  Matrix kbb = gather(k, train, train);
  kbb.diagonal().array() += eps;
  const auto llt = factor_spd(std::move(kbb), "posterior_mean_exact");
  PosteriorResult out;
  out.mean = gather(k, predict, train) * llt.solve(y_train);
  out.nugget = eps;
  return out;
}

Vector posterior_variance_exact(const DenseKernel& k, std::span<const Index> train,
                                std::span<const Index> predict, double eps) {
  if (k.rows() != k.cols()) throw InputError("posterior_variance_exact: kernel must be square");
  check_rows(train, k.rows(), "posterior_variance_exact");
  check_rows(predict, k.rows(), "posterior_variance_exact");
  Matrix kbb = gather(k, train, train);
  kbb.diagonal().array() += eps;
  const auto llt = factor_spd(std::move(kbb), "posterior_variance_exact");
  const Matrix kbs = gather(k, train, predict);
  const Matrix solved = llt.solve(kbs);
  Vector var(static_cast<Index>(predict.size()));
  for (Index i = 0; i < var.size(); ++i) {
    const Index p = predict[static_cast<std::size_t>(i)];
    var(i) = k(p, p) - kbs.col(i).dot(solved.col(i));
  }
  return var;
}

PosteriorResult posterior_mean_lowrank(const LowRankFactor& q, std::span<const Index> train,
                                       std::span<const Index> predict, const Matrix& y_train,
                                       double eps) {
  require_positive_nugget(eps, "posterior_mean_lowrank");
  check_rows(train, q.n(), "posterior_mean_lowrank");
  check_rows(predict, q.n(), "posterior_mean_lowrank");
  if (y_train.rows() != static_cast<Index>(train.size()))
    throw InputError("posterior_mean_lowrank: y_train rows do not match the training set");
  const Matrix qb = gather_rows(q.q(), train);
  Matrix g = qb.transpose() * qb;
  g.diagonal().array() += eps;
  const auto llt = factor_spd(std::move(g), "posterior_mean_lowrank");
  PosteriorResult out;
  out.mean = gather_rows(q.q(), predict) * llt.solve(qb.transpose() * y_train);
  out.nugget = eps;
  return out;
}

Vector posterior_variance_lowrank(const LowRankFactor& q, std::span<const Index> train,
                                  std::span<const Index> predict, double eps) {
  require_positive_nugget(eps, "posterior_variance_lowrank");
  check_rows(train, q.n(), "posterior_variance_lowrank");
  check_rows(predict, q.n(), "posterior_variance_lowrank");
  const Matrix qb = gather_rows(q.q(), train);
  Matrix g = qb.transpose() * qb;
  g.diagonal().array() += eps;
  const auto llt = factor_spd(std::move(g), "posterior_variance_lowrank");
  const Matrix qs = gather_rows(q.q(), predict);
  const Matrix solved = llt.solve(qs.transpose());
  return eps * (qs.transpose().array() * solved.array()).colwise().sum().transpose();
}

std::vector<int> classify_onehot(const Matrix& mean) {
  if (mean.cols() < 1) throw InputError("classify_onehot: no channels");
  std::vector<int> out(static_cast<std::size_t>(mean.rows()));
  for (Index i = 0; i < mean.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < mean.cols(); ++c)
      if (mean(i, c) > mean(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

std::vector<double> nugget_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1)
    throw InputError("nugget_grid: need 0 < lo <= hi and at least one point");
  std::vector<double> grid(static_cast<std::size_t>(points));
  if (points == 1) {
    grid[0] = lo;
    return grid;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (points - 1));
  return grid;
}

namespace {

template <class Predict>
NuggetSearch search(const SplitIndices& split, const Targets& targets, std::span<const double> grid,
                    Predict&& predict) {
  if (grid.empty()) throw InputError("select_nugget: empty grid");
  if (split.val.empty()) throw InputError("select_nugget: validation set is empty");
  NuggetSearch out;
  out.grid.assign(grid.begin(), grid.end());
  std::sort(out.grid.begin(), out.grid.end());
  out.nugget = out.grid.front();
  if (targets.task == Task::regression) {
    double lo = targets.values(split.val.front());
    double hi = lo;
    for (Index v : split.val) {
      lo = std::min(lo, targets.values(v));
      hi = std::max(hi, targets.values(v));
    }
    if (lo == hi) {
      out.warning = "validation targets are constant; R^2 undefined, using the smallest nugget";
      out.score = std::numeric_limits<double>::quiet_NaN();
      out.scores.assign(out.grid.size(), out.score);
      return out;
    }
  }
  const Matrix y = targets.encode(split.train);
  out.score = -std::numeric_limits<double>::infinity();
  for (double eps : out.grid) {
    const double s = targets.score(predict(y, eps), split.val);
    out.scores.push_back(s);
    if (s > out.score) {
      out.score = s;
      out.nugget = eps;
    }
  }
  return out;
}

}  // namespace

NuggetSearch select_nugget(const DenseKernel& k, const SplitIndices& split, const Targets& targets,
                           std::span<const double> grid) {
  return search(split, targets, grid, [&](const Matrix& y, double eps) {
    return posterior_mean_exact(k, split.train, split.val, y, eps).mean;
  });
}

NuggetSearch select_nugget(const LowRankFactor& q, const SplitIndices& split,
                           const Targets& targets, std::span<const double> grid) {
  return search(split, targets, grid, [&](const Matrix& y, double eps) {
    return posterior_mean_lowrank(q, split.train, split.val, y, eps).mean;
  });
}

double micro_f1(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw InputError("micro_f1: length mismatch");
  if (pred.empty()) throw InputError("micro_f1: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw InputError("r2: length mismatch");
  if (pred.empty()) throw InputError("r2: empty input");
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace gnngp

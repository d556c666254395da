#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "fmalign/eval.hpp"

namespace fmalign {

namespace {

Matrix with_bias(const Matrix& z) {
  Matrix x(z.rows(), z.cols() + 1);
  x.leftCols(z.cols()) = z;
  x.col(z.cols()).setOnes();
  return x;
}

std::vector<Index> class_positions(const std::vector<Label>& labels, const std::vector<Label>& classes) {
  std::vector<Index> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), labels[i]);
    if (it == classes.end() || *it != labels[i])
      throw DataError("label " + std::to_string(labels[i]) + " is not among the classifier's classes");
    y[i] = static_cast<Index>(it - classes.begin());
  }
  return y;
}

/// Objective and gradient of the penalized mean cross-entropy.
struct Problem {
  const Matrix& x;  // samples x (dim + 1)
  const std::vector<Index>& y;
  Index classes;
  double l2;

  double operator()(const Matrix& w, Matrix* grad) const {
    const Index m = x.rows(), d = x.cols() - 1;
    Matrix p = x * w;
    double loss = 0.0;
    for (Index i = 0; i < m; ++i) {
      const double top = p.row(i).maxCoeff();
      p.row(i) = (p.row(i).array() - top).exp();
      const double sum = p.row(i).sum();
      loss += std::log(sum) - std::log(p(i, y[static_cast<std::size_t>(i)]));
      p.row(i) /= sum;
    }
    loss /= static_cast<double>(m);
    loss += 0.5 * l2 * w.topRows(d).squaredNorm();
    if (grad) {
      for (Index i = 0; i < m; ++i) p(i, y[static_cast<std::size_t>(i)]) -= 1.0;
      *grad = x.transpose() * p / static_cast<double>(m);
      grad->topRows(d) += l2 * w.topRows(d);
    }
    return loss;
  }
};

double dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

}  // namespace

double logistic_objective(const Matrix& weights, const Matrix& z, const std::vector<Label>& labels,
                          const std::vector<Label>& classes, double l2) {
  const Matrix x = with_bias(z);
  const std::vector<Index> y = class_positions(labels, classes);
  return Problem{x, y, static_cast<Index>(classes.size()), l2}(weights, nullptr);
}

ClassifierModel train_logistic(const Matrix& z, const std::vector<Label>& labels, const ClassifierOptions& options) {
  if (static_cast<Index>(labels.size()) != z.rows())
    throw DataError("classifier got " + std::to_string(labels.size()) + " labels for " + std::to_string(z.rows()) +
                    " rows");
  if (!z.allFinite()) throw DataError("classifier input contains non-finite values");
  ClassifierModel model;
  model.classes = labels;
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw DataError("classifier needs at least two classes");

  const Matrix x = with_bias(z);
  const std::vector<Index> y = class_positions(labels, model.classes);
  const Problem f{x, y, static_cast<Index>(model.classes.size()), options.l2};

  constexpr std::size_t kMemory = 10;
  Matrix w = Matrix::Zero(x.cols(), static_cast<Index>(model.classes.size()));
  Matrix g;
  double fw = f(w, &g);
  model.objective_trace.push_back(fw);
  std::deque<std::pair<Matrix, Matrix>> history;  // (s, y) pairs

  int it = 0;
  for (; it < options.max_iterations && g.cwiseAbs().maxCoeff() >= options.gradient_tol; ++it) {
    // Two-loop recursion.
    Matrix q = g;
    std::vector<double> a(history.size());
    for (std::size_t h = history.size(); h-- > 0;) {
      const auto& [s, yv] = history[h];
      a[h] = dot(s, q) / dot(yv, s);
      q -= a[h] * yv;
    }
    if (!history.empty()) {
      const auto& [s, yv] = history.back();
      q *= dot(s, yv) / dot(yv, yv);
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      const auto& [s, yv] = history[h];
      const double b = dot(yv, q) / dot(yv, s);
      q += (a[h] - b) * s;
    }
    Matrix dir = -q;
    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      history.clear();
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    Matrix w_next, g_next;
    double f_next = 0.0;
    bool accepted = false;
    for (int back = 0; back < 60; ++back, step *= 0.5) {
      w_next = w + step * dir;
      f_next = f(w_next, &g_next);
      if (std::isfinite(f_next) && f_next <= fw + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted || !(f_next < fw)) break;

    Matrix s = w_next - w, yv = g_next - g;
    if (dot(s, yv) > 1e-12 * s.norm() * yv.norm()) {
      history.emplace_back(std::move(s), std::move(yv));
      if (history.size() > kMemory) history.pop_front();
    }
    w = std::move(w_next);
    g = std::move(g_next);
    fw = f_next;
    model.objective_trace.push_back(fw);
  }
  model.weights = std::move(w);
  model.iterations = it;
  return model;
}

Matrix decision_scores(const ClassifierModel& model, const Matrix& z) {
  if (z.cols() + 1 != model.weights.rows())
    throw DataError("classifier expects " + std::to_string(model.weights.rows() - 1) + " features, got " +
                    std::to_string(z.cols()));
  return with_bias(z) * model.weights;
}

std::vector<Label> predict(const ClassifierModel& model, const Matrix& z) {
  const Matrix s = decision_scores(model, z);
  std::vector<Label> out(static_cast<std::size_t>(s.rows()));
  for (Index i = 0; i < s.rows(); ++i) {
    Index best = 0;
    s.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy(const std::vector<Label>& predicted, const std::vector<Label>& truth) {
  if (predicted.size() != truth.size()) throw DataError("prediction and truth lengths differ");
  if (truth.empty()) throw DataError("accuracy of an empty set is undefined");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

namespace {

Vector average_ranks(const Vector& v) {
  std::vector<Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
  Vector r(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v(order[j + 1]) == v(order[i])) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r(order[t]) = rank;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("spearman needs two equal-length samples of size >= 2");
  const Vector ra = average_ranks(a), rb = average_ranks(b);
  const Vector ca = ra.array() - ra.mean(), cb = rb.array() - rb.mean();
  const double denom = ca.norm() * cb.norm();
  return denom > 0.0 ? ca.dot(cb) / denom : 0.0;
}

}  // namespace fmalign

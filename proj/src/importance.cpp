#include "riskfuse/importance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskfuse/errors.hpp"
#include "riskfuse/rng.hpp"

namespace riskfuse {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  return idx;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd d(x.rows(), centers.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index l = 0; l < centers.rows(); ++l) d(i, l) = (x.row(i) - centers.row(l)).squaredNorm();
  return d;
}

Eigen::MatrixXd gaussian(const Eigen::MatrixXd& sq, double width) {
  return (sq.array() * (-0.5 / (width * width))).exp().matrix();
}

Eigen::VectorXd solve_alpha(const Eigen::MatrixXd& k_train, const Eigen::MatrixXd& k_target, double ridge) {
  Eigen::MatrixXd h = k_train.transpose() * k_train / static_cast<double>(k_train.rows());
  Eigen::VectorXd hbar = k_target.colwise().mean().transpose();
  h.diagonal().array() += ridge;
  Eigen::VectorXd alpha = h.ldlt().solve(hbar);
  if (!alpha.allFinite()) throw FitError("importance weighting: degenerate kernel matrix");
  return alpha.cwiseMax(0.0);
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace

ImportanceFit importance_weights(const Eigen::MatrixXd& train_in, const Eigen::MatrixXd& target_in,
                                 const ImportanceOptions& options) {
  if (train_in.rows() == 0 || target_in.rows() == 0) throw DomainError("importance weighting needs non-empty samples");
  if (train_in.cols() != target_in.cols()) throw DomainError("train and target feature counts differ");
  ImportanceFit fit;
  fit.weights.assign(static_cast<std::size_t>(train_in.rows()), 1.0);

  // standardise on the pooled sample, dropping constant columns
  const Eigen::Index n_tr = train_in.rows(), n_te = target_in.rows();
  std::vector<Eigen::Index> keep;
  std::vector<double> mean, sd;
  for (Eigen::Index c = 0; c < train_in.cols(); ++c) {
    double m = (train_in.col(c).sum() + target_in.col(c).sum()) / static_cast<double>(n_tr + n_te);
    double ss = (train_in.col(c).array() - m).square().sum() + (target_in.col(c).array() - m).square().sum();
    double s = std::sqrt(ss / static_cast<double>(n_tr + n_te));
    if (s > 1e-12 * std::max(1.0, std::abs(m))) {
      keep.push_back(c);
      mean.push_back(m);
      sd.push_back(s);
    }
  }
  if (keep.empty()) return fit;
  auto standardise = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      out.col(static_cast<Eigen::Index>(k)) = (x.col(keep[k]).array() - mean[k]) / sd[k];
    return out;
  };
  Eigen::MatrixXd train = standardise(train_in), target = standardise(target_in);

  Rng rng = substream(options.seed, 0, 0x6c736966);
  auto target_order = shuffled(static_cast<std::size_t>(n_te), rng);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.max_centers)),
                                              static_cast<std::size_t>(n_te));
  std::vector<std::size_t> center_idx(target_order.begin(), target_order.begin() + static_cast<std::ptrdiff_t>(b));
  Eigen::MatrixXd centers = rows_of(target, center_idx);
  fit.centers = static_cast<int>(b);

  std::vector<double> pair;
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = i + 1; j < centers.rows(); ++j) pair.push_back((centers.row(i) - centers.row(j)).norm());
  double median = 1.0;
  if (!pair.empty()) {
    std::nth_element(pair.begin(), pair.begin() + static_cast<std::ptrdiff_t>(pair.size() / 2), pair.end());
    median = pair[pair.size() / 2];
    if (!(median > 0.0)) median = 1.0;
  }

  Eigen::MatrixXd d_train = squared_distances(train, centers);
  Eigen::MatrixXd d_target = squared_distances(target, centers);

  // fold labels
  const int folds = std::max(2, options.folds);
  auto train_order = shuffled(static_cast<std::size_t>(n_tr), rng);
  std::vector<int> train_fold(static_cast<std::size_t>(n_tr)), target_fold(static_cast<std::size_t>(n_te));
  for (std::size_t i = 0; i < train_order.size(); ++i) train_fold[train_order[i]] = static_cast<int>(i % folds);
  for (std::size_t i = 0; i < target_order.size(); ++i) target_fold[target_order[i]] = static_cast<int>(i % folds);

  double best = std::numeric_limits<double>::infinity();
  for (double scale : options.width_grid) {
    const double width = scale * median;
    Eigen::MatrixXd k_train = gaussian(d_train, width);
    Eigen::MatrixXd k_target = gaussian(d_target, width);
    std::vector<std::vector<std::size_t>> tr_in(folds), tr_out(folds), te_in(folds), te_out(folds);
    for (std::size_t i = 0; i < train_fold.size(); ++i)
      for (int f = 0; f < folds; ++f) (train_fold[i] == f ? tr_out : tr_in)[f].push_back(i);
    for (std::size_t i = 0; i < target_fold.size(); ++i)
      for (int f = 0; f < folds; ++f) (target_fold[i] == f ? te_out : te_in)[f].push_back(i);
    for (double ridge : options.ridge_grid) {
      double score = 0.0;
      int used = 0;
      for (int f = 0; f < folds; ++f) {
        if (tr_in[f].empty() || te_in[f].empty() || tr_out[f].empty() || te_out[f].empty()) continue;
        Eigen::VectorXd alpha = solve_alpha(rows_of(k_train, tr_in[f]), rows_of(k_target, te_in[f]), ridge);
        Eigen::VectorXd r_tr = rows_of(k_train, tr_out[f]) * alpha;
        Eigen::VectorXd r_te = rows_of(k_target, te_out[f]) * alpha;
        score += 0.5 * r_tr.squaredNorm() / static_cast<double>(r_tr.size()) - r_te.mean();
        ++used;
      }
      if (used == 0) score = 0.0;
      else score /= used;
      if (score < best) {
        best = score;
        fit.ridge = ridge;
        fit.width = width;
      }
    }
  }

  Eigen::MatrixXd k_train = gaussian(d_train, fit.width);
  Eigen::VectorXd alpha = solve_alpha(k_train, gaussian(d_target, fit.width), fit.ridge);
  Eigen::VectorXd r = (k_train * alpha).cwiseMax(0.0);
  double total = r.sum();
  if (!(total > 0.0)) throw FitError("importance weighting: all estimated ratios are zero");
  const double scale = static_cast<double>(n_tr) / total;
  for (Eigen::Index i = 0; i < n_tr; ++i) fit.weights[static_cast<std::size_t>(i)] = r[i] * scale;
  return fit;
}

}  // namespace riskfuse

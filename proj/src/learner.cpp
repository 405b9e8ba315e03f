#include "coreset/learner.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coreset {

namespace {

std::vector<Index> layer_dims(const Architecture& arch) {
  std::vector<Index> dims{arch.input_dim};
  if (arch.kind == LearnerKind::mlp) dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
  dims.push_back(arch.num_classes);
  return dims;
}

using ConstMatMap = Eigen::Map<const MatrixXd>;
using MatMap = Eigen::Map<MatrixXd>;

struct LayerView {
  Index in = 0, out = 0, offset = 0;
  Index weights() const { return in * out; }
};

std::vector<LayerView> layers(const Architecture& arch) {
  const auto dims = layer_dims(arch);
  std::vector<LayerView> out;
  Index offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    out.push_back({dims[l], dims[l + 1], offset});
    offset += dims[l] * dims[l + 1] + dims[l + 1];
  }
  return out;
}

bool squared_error(const Architecture& arch) { return arch.kind == LearnerKind::ridge; }

struct Forward {
  std::vector<MatrixXd> pre;  // Z_l, n x out
  std::vector<MatrixXd> act;  // A_0 = X, A_l = relu(Z_l) for hidden layers
};

Forward forward(const Architecture& arch, const VectorXd& params, const RowMatrixXd& X) {
  if (X.cols() != arch.input_dim) throw ConfigError("feature dimension does not match the model");
  const auto views = layers(arch);
  Forward f;
  f.act.emplace_back(X);
  for (std::size_t l = 0; l < views.size(); ++l) {
    const auto& v = views[l];
    ConstMatMap W(params.data() + v.offset, v.out, v.in);
    Eigen::Map<const VectorXd> b(params.data() + v.offset + v.weights(), v.out);
    MatrixXd Z = f.act.back() * W.transpose();
    Z.rowwise() += b.transpose();
    if (l + 1 < views.size()) f.act.emplace_back(Z.cwiseMax(0.0));
    f.pre.push_back(std::move(Z));
  }
  return f;
}

/// Per-example losses and (optionally) dloss/doutputs.
void output_loss(bool squared, const MatrixXd& Z, std::span<const int> labels, Eigen::Ref<VectorXd> losses,
                 MatrixXd* dZ) {
  const Index n = Z.rows(), C = Z.cols();
  if (dZ) dZ->resize(n, C);
  for (Index i = 0; i < n; ++i) {
    const int y = labels[std::size_t(i)];
    if (y < 0 || y >= C) throw DataError("label out of range for the model");
    if (squared) {
      Eigen::RowVectorXd r = Z.row(i);
      r[y] -= 1.0;
      losses[i] = r.squaredNorm();
      if (dZ) dZ->row(i) = 2.0 * r;
    } else {
      const double m = Z.row(i).maxCoeff();
      Eigen::RowVectorXd e = (Z.row(i).array() - m).exp();
      const double sum = e.sum();
      losses[i] = m + std::log(sum) - Z(i, y);
      if (dZ) {
        dZ->row(i) = e / sum;
        (*dZ)(i, y) -= 1.0;
      }
    }
  }
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Index c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = int(c);
  return best;
}

} // namespace

Index Architecture::parameter_count() const {
  Index total = 0;
  for (const auto& v : layers(*this)) total += v.weights() + v.out;
  return total;
}

Architecture make_architecture(const InnerConfig& cfg, Index input_dim, Index num_classes) {
  Architecture arch{cfg.kind, input_dim, num_classes, {}};
  if (cfg.kind == LearnerKind::mlp) arch.hidden.assign(std::size_t(cfg.hidden_layers), cfg.hidden_width);
  return arch;
}

TrainedModel::TrainedModel(Architecture arch, VectorXd params, double final_loss)
    : arch_(std::move(arch)), params_(std::move(params)), final_loss_(final_loss) {
  if (params_.size() != arch_.parameter_count()) throw ConfigError("parameter count does not match architecture");
}

TrainedModel TrainedModel::initialize(const Architecture& arch, double init_scale, Rng& rng) {
  VectorXd params = VectorXd::Zero(arch.parameter_count());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& v : layers(arch)) {
    const double scale = init_scale / std::sqrt(double(std::max<Index>(v.in, 1)));
    for (Index k = 0; k < v.weights(); ++k) params[v.offset + k] = scale * normal(rng);
  }
  return TrainedModel(arch, std::move(params));
}

TrainedModel TrainedModel::zeros(const Architecture& arch) {
  return TrainedModel(arch, VectorXd::Zero(arch.parameter_count()));
}

MatrixXd TrainedModel::outputs(const RowMatrixXd& X) const { return forward(arch_, params_, X).pre.back(); }

MatrixXd TrainedModel::embed(const RowMatrixXd& X) const {
  auto f = forward(arch_, params_, X);
  if (arch_.kind == LearnerKind::mlp) return f.act.back();
  return f.pre.back();
}

std::vector<double> TrainedModel::per_example_loss(const Dataset& data) const {
  const MatrixXd Z = outputs(data.features());
  VectorXd losses(Z.rows());
  output_loss(squared_error(arch_), Z, data.labels(), losses, nullptr);
  return {losses.data(), losses.data() + losses.size()};
}

std::vector<int> TrainedModel::predict(const RowMatrixXd& X) const {
  const MatrixXd Z = outputs(X);
  std::vector<int> out(static_cast<std::size_t>(Z.rows()));
  for (Index i = 0; i < Z.rows(); ++i) out[std::size_t(i)] = argmax_lowest(Z.row(i));
  return out;
}

ObjectiveValue objective(const Architecture& arch, const VectorXd& params, const RowMatrixXd& X,
                         std::span<const int> labels, double scale, double decay) {
  if (X.rows() == 0) throw DataError("objective over an empty example set");
  const auto views = layers(arch);
  const Forward f = forward(arch, params, X);
  const Index n = X.rows();

  VectorXd losses(n);
  MatrixXd G;
  output_loss(squared_error(arch), f.pre.back(), labels, losses, &G);
  G *= scale / double(n);

  ObjectiveValue out;
  out.loss = scale * losses.mean() + 0.5 * decay * params.squaredNorm();
  out.gradient = decay * params;
  for (std::size_t l = views.size(); l-- > 0;) {
    const auto& v = views[l];
    MatMap dW(out.gradient.data() + v.offset, v.out, v.in);
    Eigen::Map<VectorXd> db(out.gradient.data() + v.offset + v.weights(), v.out);
    dW.noalias() += G.transpose() * f.act[l];
    db += G.colwise().sum().transpose();
    if (l > 0) {
      ConstMatMap W(params.data() + v.offset, v.out, v.in);
      MatrixXd back = G * W;
      G = back.cwiseProduct((f.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

double objective_value(const Architecture& arch, const VectorXd& params, const RowMatrixXd& X,
                       std::span<const int> labels, double scale, double decay) {
  if (X.rows() == 0) throw DataError("objective over an empty example set");
  const MatrixXd Z = forward(arch, params, X).pre.back();
  VectorXd losses(Z.rows());
  output_loss(squared_error(arch), Z, labels, losses, nullptr);
  return scale * losses.mean() + 0.5 * decay * params.squaredNorm();
}

TrainedModel fit_ridge(const Dataset& data, const Mask& mask, Index budget, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
  if (mask.size() != data.size()) throw ConfigError("mask length does not match dataset");
  const Index d = data.feature_dim(), C = data.num_classes();
  Architecture arch{LearnerKind::ridge, d, C, {}};
  if (mask.empty()) return TrainedModel::zeros(arch);

  const auto idx = mask.support();
  const Index m = Index(idx.size());
  MatrixXd Xa(m, d + 1);
  MatrixXd Y = MatrixXd::Zero(m, C);
  for (Index k = 0; k < m; ++k) {
    Xa.row(k) << data.features().row(Index(idx[std::size_t(k)])), 1.0;
    Y(k, data.labels()[idx[std::size_t(k)]]) = 1.0;
  }
  const double inv_k = 1.0 / double(budget);
  MatrixXd A = inv_k * (Xa.transpose() * Xa);
  A.diagonal().array() += lambda;
  const MatrixXd Wt = A.ldlt().solve(inv_k * (Xa.transpose() * Y));  // (d+1) x C

  VectorXd params(arch.parameter_count());
  MatMap(params.data(), C, d) = Wt.topRows(d).transpose();
  params.tail(C) = Wt.row(d).transpose();
  TrainedModel model(arch, std::move(params));
  model.set_final_loss(objective_value(arch, model.parameters(), data.subset(idx).features(),
                                       data.subset(idx).labels(), double(m) * inv_k, 2.0 * lambda));
  return model;
}

TrainedModel fit(const Dataset& data, const Mask& mask, Index budget, const InnerConfig& cfg, Rng& rng,
                 const TrainedModel* warm) {
  if (mask.size() != data.size()) throw ConfigError("mask length does not match dataset");
  if (mask.empty()) throw EmptyCoresetError();
  if (budget < 1) throw ConfigError("budget must be at least 1");
  if (cfg.kind == LearnerKind::ridge) return fit_ridge(data, mask, budget, cfg.ridge_lambda);

  const auto idx = mask.support();
  const Dataset sub = data.subset(idx);
  const Index m = sub.size();
  const Architecture arch = make_architecture(cfg, data.feature_dim(), data.num_classes());
  TrainedModel model = (warm && cfg.warm_start && warm->architecture() == arch)
                           ? *warm
                           : TrainedModel::initialize(arch, cfg.init_scale, rng);

  const double scale = double(m) / double(budget);
  const Index batch = cfg.minibatch <= 0 ? m : std::min<Index>(cfg.minibatch, m);
  VectorXd& theta = model.parameters();
  VectorXd velocity = VectorXd::Zero(theta.size());
  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), std::size_t{0});

  double previous = objective_value(arch, theta, sub.features(), sub.labels(), scale, cfg.weight_decay);
  double current = previous;
  int stalls = 0;
  RowMatrixXd Xb;
  std::vector<int> yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < m) std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < m; start += batch) {
      const Index len = std::min(batch, m - start);
      Xb.resize(len, sub.feature_dim());
      yb.resize(std::size_t(len));
      for (Index k = 0; k < len; ++k) {
        const auto i = order[std::size_t(start + k)];
        Xb.row(k) = sub.features().row(Index(i));
        yb[std::size_t(k)] = sub.labels()[i];
      }
      const auto obj = objective(arch, theta, Xb, yb, scale, cfg.weight_decay);
      velocity = cfg.momentum * velocity + obj.gradient;
      theta -= cfg.step_size * velocity;
    }
    current = objective_value(arch, theta, sub.features(), sub.labels(), scale, cfg.weight_decay);
    if (!std::isfinite(current)) throw RuntimeFailure("inner training diverged (non-finite loss)");
    // a stall is an epoch whose loss moved by less than the tolerance in either direction;
    // momentum makes the loss oscillate, so a rise is not treated as convergence
    stalls = (std::abs(previous - current) < cfg.plateau_tolerance) ? stalls + 1 : 0;
    previous = current;
    if (stalls >= cfg.plateau_patience) break;
  }
  model.set_final_loss(current);
  return model;
}

TrainedModel fit(const Dataset& data, const Mask& mask, const InnerConfig& cfg, Rng& rng, const TrainedModel* warm) {
  return fit(data, mask, std::max<Index>(mask.cardinality(), 1), cfg, rng, warm);
}

double evaluate_loss(const TrainedModel& model, const Dataset& examples) {
  if (examples.empty()) throw DataError("evaluate_loss over an empty example set");
  const auto losses = model.per_example_loss(examples);
  return std::accumulate(losses.begin(), losses.end(), 0.0) / double(losses.size());
}

double accuracy(const TrainedModel& model, const Dataset& data) {
  if (data.empty()) throw DataError("accuracy over an empty dataset");
  const auto pred = model.predict(data.features());
  Index correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels()[i];
  return double(correct) / double(pred.size());
}

} // namespace coreset

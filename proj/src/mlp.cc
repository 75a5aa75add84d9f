#include "gcnet/mlp.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "gcnet/csv.h"
#include "json.hpp"

namespace gcnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string ToString(Activation a) {
  return a == Activation::kSigmoid ? "sigmoid" : "softplus";
}

Activation ActivationFromString(const std::string& s) {
  if (s == "softplus") return Activation::kSoftplus;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

std::vector<int> MlpParams::Arch() const {
  std::vector<int> a;
  if (layers.empty()) return a;
  a.push_back(static_cast<int>(layers.front().w.cols()));
  for (const auto& l : layers) a.push_back(static_cast<int>(l.w.rows()));
  return a;
}

int MlpParams::NumParams() const {
  int n = 0;
  for (const auto& l : layers) n += static_cast<int>(l.w.size() + l.b.size());
  return n;
}

bool MlpParams::AllFinite() const {
  for (const auto& l : layers)
    if (!l.w.allFinite() || !l.b.allFinite()) return false;
  return true;
}

VectorXd MlpParams::Flatten() const {
  VectorXd v(NumParams());
  int k = 0;
  for (const auto& l : layers) {
    v.segment(k, l.w.size()) = Eigen::Map<const VectorXd>(l.w.data(), l.w.size());
    k += static_cast<int>(l.w.size());
    v.segment(k, l.b.size()) = l.b;
    k += static_cast<int>(l.b.size());
  }
  return v;
}

void MlpParams::Unflatten(const VectorXd& v) {
  if (v.size() != NumParams()) throw std::invalid_argument("Unflatten: size mismatch");
  int k = 0;
  for (auto& l : layers) {
    Eigen::Map<VectorXd>(l.w.data(), l.w.size()) = v.segment(k, l.w.size());
    k += static_cast<int>(l.w.size());
    l.b = v.segment(k, l.b.size());
    k += static_cast<int>(l.b.size());
  }
}

bool MlpParams::operator==(const MlpParams& o) const {
  if (normalization != o.normalization || layers.size() != o.layers.size()) return false;
  for (size_t i = 0; i < layers.size(); ++i) {
    const Layer& a = layers[i];
    const Layer& b = o.layers[i];
    if (a.act != b.act || a.w.rows() != b.w.rows() || a.w.cols() != b.w.cols() ||
        a.b.size() != b.b.size() || a.w != b.w || a.b != b.b)
      return false;
  }
  return true;
}

MlpParams MakeMlp(const std::vector<int>& arch) {
  if (arch.size() < 2) throw std::invalid_argument("MakeMlp: need at least two widths");
  MlpParams net;
  for (size_t i = 1; i < arch.size(); ++i) {
    Layer l;
    l.w = MatrixXd::Zero(arch[i], arch[i - 1]);
    l.b = VectorXd::Zero(arch[i]);
    l.act = i + 1 == arch.size() ? Activation::kSigmoid : Activation::kSoftplus;
    net.layers.push_back(std::move(l));
  }
  return net;
}

MlpParams InitMlp(uint64_t seed, const std::vector<int>& arch) {
  MlpParams net = MakeMlp(arch);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& l : net.layers) {
    const double scale = std::sqrt(2.0 / static_cast<double>(l.w.cols()));
    for (int c = 0; c < l.w.cols(); ++c)
      for (int r = 0; r < l.w.rows(); ++r) l.w(r, c) = scale * normal(rng);
  }
  return net;
}

namespace {

double Softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void Apply(Activation act, MatrixXd* z) {
  if (act == Activation::kSoftplus)
    *z = z->unaryExpr(&Softplus);
  else
    *z = z->unaryExpr(&Sigmoid);
}

MatrixXd Normalize(const MlpParams& net, const MatrixXd& states) {
  MatrixXd x = states;
  for (int i = 0; i < 6; ++i) x.row(i) /= net.normalization[i];
  return x;
}

// Pre-activations and activations of every layer (acts[0] is the input).
struct Tape {
  std::vector<MatrixXd> pre;
  std::vector<MatrixXd> acts;
};

void ForwardTape(const MlpParams& net, const MatrixXd& x, Tape* tape) {
  tape->pre.resize(net.layers.size());
  tape->acts.resize(net.layers.size() + 1);
  tape->acts[0] = x;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    MatrixXd& z = tape->pre[i];
    z.noalias() = l.w * tape->acts[i];
    z.colwise() += l.b;
    tape->acts[i + 1] = z;
    Apply(l.act, &tape->acts[i + 1]);
  }
}

// Loss and (optionally) gradient on a column batch of normalized inputs.
double LossGradMat(const MlpParams& net, const MatrixXd& x, const MatrixXd& t, MlpParams* grad,
                   Tape* tape) {
  ForwardTape(net, x, tape);
  const double n = static_cast<double>(x.cols());
  const MatrixXd diff = tape->acts.back() - t;
  const double loss = diff.squaredNorm() / n;
  if (!grad) return loss;
  if (grad->layers.size() != net.layers.size()) *grad = MakeMlp(net.Arch());
  grad->normalization = net.normalization;
  MatrixXd delta = (2.0 / n) * diff;  // dL/d(activation)
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Layer& l = net.layers[i];
    if (l.act == Activation::kSigmoid) {
      const MatrixXd& y = tape->acts[i + 1];
      delta.array() *= y.array() * (1.0 - y.array());
    } else {
      delta.array() *= tape->pre[i].unaryExpr(&Sigmoid).array();
    }
    grad->layers[i].w.noalias() = delta * tape->acts[i].transpose();
    grad->layers[i].b = delta.rowwise().sum();
    grad->layers[i].act = l.act;
    if (i > 0) {
      MatrixXd prev;
      prev.noalias() = l.w.transpose() * delta;
      delta.swap(prev);
    }
  }
  return loss;
}

void PackPairs(const std::vector<Pair>& pairs, MatrixXd* states, MatrixXd* targets) {
  const int n = static_cast<int>(pairs.size());
  states->resize(6, n);
  targets->resize(2, n);
  for (int j = 0; j < n; ++j) {
    states->col(j) = pairs[j].first.vec();
    (*targets)(0, j) = pairs[j].second.u1;
    (*targets)(1, j) = pairs[j].second.u2;
  }
}

double BatchedLoss(const MlpParams& net, const MatrixXd& x, const MatrixXd& t) {
  constexpr int kChunk = 4096;
  double sum = 0.0;
  Tape tape;
  for (int s = 0; s < x.cols(); s += kChunk) {
    const int m = std::min<int>(kChunk, static_cast<int>(x.cols()) - s);
    sum += LossGradMat(net, x.middleCols(s, m), t.middleCols(s, m), nullptr, &tape) * m;
  }
  return x.cols() > 0 ? sum / x.cols() : 0.0;
}

}  // namespace

MatrixXd ForwardBatch(const MlpParams& net, const MatrixXd& states) {
  Tape tape;
  ForwardTape(net, Normalize(net, states), &tape);
  return tape.acts.back();
}

RotorCommand Forward(const MlpParams& net, const PlanarState& s) {
  VectorXd a = s.vec();
  for (int i = 0; i < 6; ++i) a[i] /= net.normalization[i];
  for (const Layer& l : net.layers) {
    VectorXd z = l.w * a;
    z += l.b;
    if (l.act == Activation::kSoftplus)
      a = z.unaryExpr(&Softplus);
    else
      a = z.unaryExpr(&Sigmoid);
  }
  return {a[0], a[1]};
}

double LossAndGrad(const MlpParams& net, const std::vector<Pair>& batch, MlpParams* grad) {
  if (batch.empty()) throw std::invalid_argument("LossAndGrad: empty batch");
  MatrixXd x, t;
  PackPairs(batch, &x, &t);
  Tape tape;
  return LossGradMat(net, Normalize(net, x), t, grad, &tape);
}

double EvaluateLoss(const MlpParams& net, const std::vector<Pair>& pairs) {
  MatrixXd x, t;
  PackPairs(pairs, &x, &t);
  return BatchedLoss(net, Normalize(net, x), t);
}

std::array<double, 2> EvaluateMae(const MlpParams& net, const std::vector<Pair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("EvaluateMae: empty split");
  MatrixXd x, t;
  PackPairs(pairs, &x, &t);
  const MatrixXd y = ForwardBatch(net, x);
  const Eigen::VectorXd mae = (y - t).cwiseAbs().rowwise().mean();
  return {mae[0], mae[1]};
}

std::string TrainReport::ToJson() const {
  nlohmann::json ep = nlohmann::json::array();
  for (const auto& e : epochs)
    ep.push_back({{"epoch", e.epoch},
                  {"train_loss", e.train_loss},
                  {"val_loss", e.val_loss},
                  {"lr", e.lr}});
  nlohmann::json j = {{"epochs", ep},
                      {"best_epoch", best_epoch},
                      {"best_val_loss", best_val_loss},
                      {"train_mae", train_mae},
                      {"test_mae", test_mae}};
  return j.dump(2);
}

MlpParams TrainPairs(const MlpParams& init, const std::vector<Pair>& train,
                     const std::vector<Pair>& val, const TrainConfig& cfg,
                     TrainReport* report) {
  if (train.empty() || val.empty())
    throw std::invalid_argument("Train: train and validation splits must be non-empty");
  if (cfg.minibatch <= 0 || cfg.epochs < 0 || !(cfg.lr0 > 0.0))
    throw std::invalid_argument("Train: bad configuration");
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = TrainReport();

  MatrixXd xtr, ttr, xval, tval;
  PackPairs(train, &xtr, &ttr);
  PackPairs(val, &xval, &tval);
  xtr = Normalize(init, xtr);
  xval = Normalize(init, xval);

  MlpParams net = init;
  MlpParams grad = MakeMlp(net.Arch());
  std::vector<MatrixXd> mw, vw;
  std::vector<VectorXd> mb, vb;
  for (const auto& l : net.layers) {
    mw.push_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
    vw.push_back(MatrixXd::Zero(l.w.rows(), l.w.cols()));
    mb.push_back(VectorXd::Zero(l.b.size()));
    vb.push_back(VectorXd::Zero(l.b.size()));
  }

  MlpParams best = net;
  rep.best_val_loss = BatchedLoss(net, xval, tval);
  rep.best_epoch = 0;
  double lr = cfg.lr0;
  int stall = 0;
  long step = 0;
  const int n = static_cast<int>(xtr.cols());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  MatrixXd xb, tb;
  Tape tape;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    for (int s = 0; s < n; s += cfg.minibatch) {
      const int m = std::min(cfg.minibatch, n - s);
      xb.resize(6, m);
      tb.resize(2, m);
      for (int k = 0; k < m; ++k) {
        xb.col(k) = xtr.col(order[s + k]);
        tb.col(k) = ttr.col(order[s + k]);
      }
      const double loss = LossGradMat(net, xb, tb, &grad, &tape);
      if (!std::isfinite(loss) || !grad.AllFinite()) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "training diverged at epoch %d step %ld (loss %g, lr %g)", epoch, step,
                      loss, lr);
        throw TrainingDiverged(buf);
      }
      loss_sum += loss * m;
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const double a = lr * std::sqrt(c2) / c1;
      const double eps = cfg.adam_eps * std::sqrt(c2);
      for (size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& g = grad.layers[li];
        mw[li] = cfg.beta1 * mw[li] + (1.0 - cfg.beta1) * g.w;
        vw[li] = cfg.beta2 * vw[li] + (1.0 - cfg.beta2) * g.w.cwiseAbs2();
        mb[li] = cfg.beta1 * mb[li] + (1.0 - cfg.beta1) * g.b;
        vb[li] = cfg.beta2 * vb[li] + (1.0 - cfg.beta2) * g.b.cwiseAbs2();
        net.layers[li].w.array() -= a * mw[li].array() / (vw[li].array().sqrt() + eps);
        net.layers[li].b.array() -= a * mb[li].array() / (vb[li].array().sqrt() + eps);
      }
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / n;
    st.val_loss = BatchedLoss(net, xval, tval);
    st.lr = lr;
    if (!std::isfinite(st.val_loss))
      throw TrainingDiverged("validation loss non-finite at epoch " + std::to_string(epoch));
    rep.epochs.push_back(st);
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %3d  train %.6g  val %.6g  lr %.2g\n", epoch, st.train_loss,
                   st.val_loss, lr);
    if (st.val_loss < rep.best_val_loss) {
      rep.best_val_loss = st.val_loss;
      rep.best_epoch = epoch;
      best = net;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      lr = std::max(lr * cfg.decay, cfg.lr_floor);
      stall = 0;
    }
  }
  rep.train_mae = EvaluateMae(best, train);
  return best;
}

MlpParams Train(const MlpParams& init, const Dataset& ds, const TrainConfig& cfg,
                TrainReport* report) {
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  MlpParams net = TrainPairs(init, ds.Pairs(Split::kTrain), ds.Pairs(Split::kVal), cfg, &rep);
  const auto test = ds.Pairs(Split::kTest);
  if (!test.empty()) rep.test_mae = EvaluateMae(net, test);
  return net;
}

std::string MlpToJson(const MlpParams& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (int r = 0; r < l.w.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < l.w.cols(); ++c) row.push_back(l.w(r, c));
      w.push_back(std::move(row));
    }
    nlohmann::json b = nlohmann::json::array();
    for (int r = 0; r < l.b.size(); ++r) b.push_back(l.b[r]);
    layers.push_back({{"w", std::move(w)}, {"b", std::move(b)}, {"act", ToString(l.act)}});
  }
  nlohmann::json j = {
      {"arch", net.Arch()}, {"normalization", net.normalization}, {"layers", layers}};
  return j.dump();
}

MlpParams MlpFromJson(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  MlpParams net;
  const auto arch = j.at("arch").get<std::vector<int>>();
  net.normalization = j.at("normalization").get<std::array<double, 6>>();
  const auto& layers = j.at("layers");
  if (arch.size() != layers.size() + 1) throw SchemaError("weights: arch/layers mismatch");
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& lj = layers[i];
    Layer l;
    l.act = ActivationFromString(lj.at("act").get<std::string>());
    const auto& w = lj.at("w");
    l.w.resize(arch[i + 1], arch[i]);
    if (static_cast<int>(w.size()) != arch[i + 1]) throw SchemaError("weights: bad row count");
    for (int r = 0; r < arch[i + 1]; ++r) {
      if (static_cast<int>(w[r].size()) != arch[i]) throw SchemaError("weights: bad column count");
      for (int c = 0; c < arch[i]; ++c) l.w(r, c) = w[r][c].get<double>();
    }
    const auto b = lj.at("b").get<std::vector<double>>();
    if (static_cast<int>(b.size()) != arch[i + 1]) throw SchemaError("weights: bad bias length");
    l.b = Eigen::Map<const VectorXd>(b.data(), b.size());
    net.layers.push_back(std::move(l));
  }
  if (net.Arch().front() != 6 || net.Arch().back() != 2)
    throw SchemaError("weights: network must map 6 inputs to 2 outputs");
  return net;
}

void SaveMlp(const MlpParams& net, const std::string& path) {
  auto out = OpenForWrite(path);
  out << MlpToJson(net) << "\n";
}

MlpParams LoadMlp(const std::string& path) { return MlpFromJson(ReadFile(path)); }

}  // namespace gcnet

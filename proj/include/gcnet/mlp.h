// Fully connected state -> throttle policy network, its loss and gradient,
// and a minibatch Adam trainer.

#ifndef GCNET_MLP_H_
#define GCNET_MLP_H_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcnet/dataset.h"
#include "gcnet/dynamics.h"

namespace gcnet {

enum class Activation { kSoftplus, kSigmoid };

std::string ToString(Activation a);
Activation ActivationFromString(const std::string& s);

struct Layer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
  Activation act = Activation::kSoftplus;
};

struct MlpParams {
  std::vector<Layer> layers;
  // Inputs are divided component-wise by these before the first layer.
  std::array<double, 6> normalization = {10.0, 10.0, 5.0, 5.0, 1.0471975511965976, 1.0};

  std::vector<int> Arch() const;
  int NumParams() const;
  bool AllFinite() const;
  // Flat views in layer order (w column-major, then b).
  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::VectorXd& v);
  bool operator==(const MlpParams& o) const;
};

// Zero-initialized network with the given widths (input first, output last).
MlpParams MakeMlp(const std::vector<int>& arch);
// He-style fan-in scaled normal weights, zero biases.
MlpParams InitMlp(uint64_t seed, const std::vector<int>& arch = {6, 100, 100, 100, 2});

RotorCommand Forward(const MlpParams& net, const PlanarState& s);
// Column-per-sample batch evaluation; inputs are raw (unnormalized) states.
Eigen::MatrixXd ForwardBatch(const MlpParams& net, const Eigen::MatrixXd& states);

// Mean over the batch of the squared error summed over both outputs.
// `grad` receives the gradient in the shape of `net`.
double LossAndGrad(const MlpParams& net, const std::vector<Pair>& batch, MlpParams* grad);

struct TrainConfig {
  int minibatch = 256;
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 100;
  int patience = 10;  // epochs without validation improvement before decay
  double decay = 0.5;
  double lr_floor = 1e-5;
  uint64_t seed = 0;
  bool verbose = false;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::array<double, 2> train_mae = {0.0, 0.0};
  std::array<double, 2> test_mae = {0.0, 0.0};

  std::string ToJson() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trains on the train split, checkpoints on the validation split and reports
// MAE on train and test. Throws std::invalid_argument for empty splits.
MlpParams Train(const MlpParams& init, const Dataset& ds, const TrainConfig& cfg,
                TrainReport* report);

// Lower-level variant over explicit pair lists.
MlpParams TrainPairs(const MlpParams& init, const std::vector<Pair>& train,
                     const std::vector<Pair>& val, const TrainConfig& cfg, TrainReport* report);

// Mean squared-error loss without gradient.
double EvaluateLoss(const MlpParams& net, const std::vector<Pair>& pairs);
// Per-output mean absolute error. Throws std::invalid_argument when empty.
std::array<double, 2> EvaluateMae(const MlpParams& net, const std::vector<Pair>& pairs);

std::string MlpToJson(const MlpParams& net);
MlpParams MlpFromJson(const std::string& text);
void SaveMlp(const MlpParams& net, const std::string& path);
MlpParams LoadMlp(const std::string& path);

}  // namespace gcnet

#endif  // GCNET_MLP_H_

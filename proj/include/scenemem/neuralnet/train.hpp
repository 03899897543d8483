#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenemem/corpus/image.hpp"
#include "scenemem/neuralnet/model.hpp"

namespace scenemem::neuralnet {

// Resamples each image to size x size and stacks them as [N, 3, size, size]
// with values in [-0.5, 0.5].
Tensor images_to_tensor(const std::vector<corpus::RgbImage>& images, std::size_t size);

// Rows `indices` of a batch-major tensor.
Tensor gather_rows(const Tensor& t, const std::vector<std::size_t>& indices);

struct Dataset {
  Tensor inputs;   // [N, ...]
  Tensor targets;  // [N, 1] scores or [N, K] multi-hot labels
  std::size_t size() const { return inputs.rank() ? inputs.dim(0) : 0; }
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  // Written as nsm_checkpoint_<epoch>.bin every checkpoint_every epochs and
  // after the last one; also used for the last-good checkpoint on abort.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::size_t checkpoint_every = 0;
};

struct LogRow {
  std::size_t epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0;
  std::optional<double> srcc;
};

struct TrainingLog {
  std::vector<LogRow> rows;
  std::string stop_reason;
  // Epoch loss on the training split, one entry per epoch.
  std::vector<double> train_losses() const;
};

void write_training_log(const std::filesystem::path& path, const TrainingLog& log);

// Thrown when a batch loss or activation is non-finite. The model has been
// restored to the end of the last completed epoch (and written to
// checkpoint_path when a checkpoint dir was configured).
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, std::size_t epoch, std::string checkpoint)
      : std::runtime_error(what), last_good_epoch(epoch), checkpoint_path(std::move(checkpoint)) {}
  std::size_t last_good_epoch;
  std::string checkpoint_path;
};

struct ClassWeights {
  std::vector<double> weights;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> zero_positive;  // classes with no positive example
  std::vector<std::size_t> clamped;        // classes whose ratio hit a bound
};

// w_c = (#negatives_c / #positives_c) clamped to [min_weight, max_weight];
// a class with no positives gets max_weight and is reported.
ClassWeights class_weights(const Tensor& labels, double min_weight = 0.01, double max_weight = 100.0);

// Multi-label pretraining with weighted sigmoid cross-entropy. Every row of
// train.targets must have at least one positive label.
TrainingLog train_category_branch(Branch& branch, const Dataset& train,
                                  const std::vector<double>& weights, const TrainConfig& config,
                                  const NetworkSpec& spec, const Dataset* validation = nullptr);

// Score regression (euclidean loss) through the branch's scalar head.
TrainingLog train_baseline_branch(Branch& branch, const Dataset& train, const TrainConfig& config,
                                  const NetworkSpec& spec, const Dataset* validation = nullptr);

// Joint end-to-end training of the two-branch model (euclidean loss).
TrainingLog train_deepnsm(DeepNsm& model, const Dataset& train, const TrainConfig& config,
                          const Dataset* validation = nullptr);

// Scalar predictions clamped to [0, 1], evaluated in batches.
std::vector<double> predict_scores(DeepNsm& model, const Tensor& inputs, std::size_t batch = 64);
std::vector<double> predict_scores(Branch& baseline, const Tensor& inputs, std::size_t batch = 64);
// Branch hidden features, [N, feature_dim].
Tensor extract_features(Branch& branch, const Tensor& inputs, std::size_t batch = 64);

}  // namespace scenemem::neuralnet

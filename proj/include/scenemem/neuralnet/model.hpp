#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scenemem/neuralnet/adam.hpp"
#include "scenemem/neuralnet/layers.hpp"

namespace scenemem::neuralnet {

// Conv stack: for each entry of `channels`, conv(kernel) -> relu -> maxpool2;
// then global average pooling and a dense + relu hidden layer.
struct BranchSpec {
  std::vector<std::size_t> channels{8, 16, 32};
  std::size_t kernel = 3;
};

struct NetworkSpec {
  std::size_t input_size = 64;
  std::size_t input_channels = 3;
  BranchSpec baseline;
  BranchSpec category;
  std::size_t deep_dim = 128;    // baseline hidden feature
  std::size_t cat_dim = 64;      // category hidden feature
  std::size_t hidden_dim = 128;  // fusion hidden layer
  std::size_t num_categories = 0;

  void validate() const;
};

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

using NamedParams = std::vector<std::pair<std::string, Param*>>;

// One pretrainable branch: trunk (conv stack + hidden layer) and a linear head.
// The baseline branch has a 1-output regression head; the category branch has
// one logit per category.
class Branch {
 public:
  Branch(const BranchSpec& spec, std::size_t input_channels, std::size_t feature_dim,
         std::size_t head_outputs);

  // Hidden layers He-uniform, head uniform(+-1/sqrt(fan_in)); biases zero.
  void init(Rng& rng);

  Tensor features(const Tensor& images) { return trunk_.forward(images); }
  Tensor forward(const Tensor& images) { return head_.forward(trunk_.forward(images)); }
  // Backward through head and trunk after forward().
  void backward(const Tensor& grad_output) { trunk_.backward(head_.backward(grad_output)); }
  // Backward through the trunk only, after features().
  void backward_features(const Tensor& grad_features) { trunk_.backward(grad_features); }

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t head_outputs() const { return head_outputs_; }
  Sequential& trunk() { return trunk_; }
  Sequential& head() { return head_; }

  NamedParams trunk_params(const std::string& prefix);
  NamedParams named_params(const std::string& prefix);

 private:
  std::size_t feature_dim_, head_outputs_;
  Sequential trunk_;
  Sequential head_;
};

Branch make_baseline_branch(const NetworkSpec& spec);
Branch make_category_branch(const NetworkSpec& spec);

// Two-branch network: [baseline feature | category feature] (baseline in
// [0, deep_dim), category in [deep_dim, deep_dim + cat_dim)) -> dense +
// relu (hidden_dim) -> dense -> scalar.
class DeepNsm {
 public:
  explicit DeepNsm(const NetworkSpec& spec);

  // Randomly initializes everything (branches included).
  void init(std::uint64_t seed);
  // Re-initializes only the fusion layers from `seed`.
  void init_head(std::uint64_t seed);
  // Copies pretrained trunk weights; branch heads are not used here.
  void load_branches(Branch& baseline, Branch& category);

  // [N, C, S, S] -> [N, 1], caching everything backward() needs.
  Tensor forward(const Tensor& images);
  void backward(const Tensor& grad_output);
  // Concatenated feature of the last forward(), [N, deep_dim + cat_dim].
  const Tensor& last_concat() const { return concat_; }

  bool freeze_baseline = false;
  bool freeze_category = false;

  const NetworkSpec& spec() const { return spec_; }
  Branch& baseline() { return baseline_; }
  Branch& category() { return category_; }
  Sequential& fusion() { return fusion_; }

  // Parameters that receive updates (frozen branches excluded).
  std::vector<Param*> trainable_params();
  NamedParams named_params();

 private:
  NetworkSpec spec_;
  Branch baseline_;
  Branch category_;
  Sequential fusion_;
  Tensor concat_;
};

void copy_param_values(const NamedParams& from, const NamedParams& to);

// Checkpoint container: header {kind, spec, epoch, params:[{name, shape}],
// adam:{t, lr}?} with float64 payload [param values..., adam m..., adam v...].
struct CheckpointInfo {
  std::string kind;
  NetworkSpec spec;
  std::int64_t epoch = 0;
  nlohmann::json extra;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointInfo& info,
                     const NamedParams& params, Adam* optimizer = nullptr);
// Reads the header only.
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);
// Loads values into `params` (matched by name and shape); restores the
// optimizer state when present in the file and `optimizer` is non-null.
CheckpointInfo load_checkpoint(const std::filesystem::path& path, const NamedParams& params,
                               Adam* optimizer = nullptr);

}  // namespace scenemem::neuralnet

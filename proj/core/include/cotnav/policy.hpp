#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotnav/annotator.hpp"
#include "cotnav/io.hpp"
#include "cotnav/simulator.hpp"
#include "cotnav/vocab.hpp"

namespace cotnav {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kTrainingLogFormatVersion = 1;

enum class FeatureSet : std::uint8_t { pure_text = 0, cot, hcot };

std::string_view to_string(FeatureSet set);
std::optional<FeatureSet> parse_feature_set(std::string_view name);

/// Feature layout. Each set is a prefix of the next:
///   pure_text  visible bag (21) | target one-hot (21) | last action (6) | pitch | step / 500
///   cot        + suggested action one-hot (6)
///   hcot       + room one-hot (8) | room confidence | max relevance
struct FeatureSpec {
  FeatureSet set = FeatureSet::hcot;

  std::size_t dim() const;
};

struct TrainingExample {
  std::vector<double> features;
  int label = 0;
  double confidence = 1.0;
};

/// Linear softmax head: logits = W x + b, W stored row-major (action, feature).
struct PolicyParams {
  std::size_t dim = 0;
  std::vector<double> weights;
  std::array<double, kNumActions> bias{};

  static PolicyParams zeros(std::size_t dim);
  double& w(std::size_t action, std::size_t feature) { return weights[action * dim + feature]; }
  double w(std::size_t action, std::size_t feature) const { return weights[action * dim + feature]; }
  std::size_t parameter_count() const { return weights.size() + bias.size(); }
  /// Flat view used by the optimizer and gradient checker: weights then bias.
  double& param(std::size_t i) { return i < weights.size() ? weights[i] : bias[i - weights.size()]; }
  double param(std::size_t i) const { return i < weights.size() ? weights[i] : bias[i - weights.size()]; }
  /// Throws NumericError on non-finite entries or a shape mismatch.
  void validate() const;

  bool operator==(const PolicyParams&) const = default;
};

enum class LossMode : std::uint8_t { ce = 0, adaptive };

std::string_view to_string(LossMode mode);
std::optional<LossMode> parse_loss_mode(std::string_view name);

struct TrainConfig {
  LossMode loss = LossMode::ce;
  double alpha = 10.0;
  double beta = 0.5;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;

  /// Throws ValidationError for alpha <= 0, beta outside [0, 1] and non-positive sizes.
  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  PolicyParams grad;
};

/// Per-sample trust weight 1 / (1 + exp(-alpha (c - beta))).
double confidence_weight(double confidence, double alpha, double beta);

std::array<double, kNumActions> softmax_probs(const PolicyParams& params, const std::vector<double>& features);

LossGrad ce_loss(const PolicyParams& params, const TrainingExample& example);
/// Cross-entropy scaled by confidence_weight; the weight is treated as data.
LossGrad adaptive_loss(const PolicyParams& params, const TrainingExample& example, double alpha, double beta);
LossGrad example_loss(const PolicyParams& params, const TrainingExample& example, LossMode mode, double alpha,
                      double beta);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;

  bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
  PolicyParams params;
  std::vector<EpochLog> log;
};

/// Mini-batch momentum SGD from zero initialization with a seeded shuffle per epoch.
TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config);

struct Prediction {
  Action action = Action::move_forward;
  std::array<double, kNumActions> probs{};
};

/// Argmax with ties going to the lowest ordinal.
Prediction predict(const PolicyParams& params, const std::vector<double>& features);

double training_accuracy(const PolicyParams& params, const std::vector<TrainingExample>& dataset);

/// Largest disagreement between analytic and central-difference gradients.
/// Relative error is used when either magnitude reaches 1e-5, absolute error below that.
double gradient_check(const PolicyParams& params, const TrainingExample& example, LossMode mode, double alpha,
                      double beta, double h = 1e-5);

TrainingExample featurize(const QARecord& record, const CategoryVocab& vocab, const FeatureSpec& spec);
std::vector<TrainingExample> featurize_all(const std::vector<QARecord>& records, const CategoryVocab& vocab,
                                           const FeatureSpec& spec);

struct PolicyModel {
  PolicyParams params;
  FeatureSpec spec;
  TrainConfig config;
  std::string vocab_hash;
};

std::string format_model(const PolicyModel& model, std::string_view manifest_hash = "");
/// Throws ParseError for malformed files and ValidationError when `vocab` does not match.
PolicyModel parse_model(std::string_view text, const CategoryVocab& vocab = CategoryVocab::standard());
void save_model(const PolicyModel& model, const std::filesystem::path& path, std::string_view manifest_hash = "");
PolicyModel load_model(const std::filesystem::path& path, const CategoryVocab& vocab = CategoryVocab::standard());

std::string format_training_log(const std::vector<EpochLog>& log, std::string_view manifest_hash = "");
std::vector<EpochLog> parse_training_log(std::string_view text);

}  // namespace cotnav

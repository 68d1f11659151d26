#include "cotnav/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cotnav/errors.hpp"
#include "cotnav/random.hpp"

namespace cotnav {
namespace {

constexpr std::size_t kBagOffset = 0;
constexpr std::size_t kTargetOffset = kBagOffset + kNumCategories;
constexpr std::size_t kLastActionOffset = kTargetOffset + kNumCategories;
constexpr std::size_t kPitchOffset = kLastActionOffset + kNumActions;
constexpr std::size_t kStepOffset = kPitchOffset + 1;
constexpr std::size_t kPureTextDim = kStepOffset + 1;
constexpr std::size_t kSuggestionOffset = kPureTextDim;
constexpr std::size_t kCotDim = kSuggestionOffset + kNumActions;
constexpr std::size_t kRoomOffset = kCotDim;
constexpr std::size_t kRoomConfidenceOffset = kRoomOffset + kNumRoomTypes;
constexpr std::size_t kMaxRelevanceOffset = kRoomConfidenceOffset + 1;
constexpr std::size_t kHcotDim = kMaxRelevanceOffset + 1;

void check_shape(const PolicyParams& params, const std::vector<double>& x) {
  if (x.size() != params.dim || params.weights.size() != params.dim * kNumActions) {
    throw NumericError("policy: feature length " + std::to_string(x.size()) + " does not match dimension " +
                       std::to_string(params.dim));
  }
}

void check_finite(const std::vector<double>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw NumericError("policy: feature " + std::to_string(i) + " is not finite");
  }
}

}  // namespace

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::pure_text: return "pure_text";
    case FeatureSet::cot: return "cot";
    case FeatureSet::hcot: return "hcot";
  }
  return "hcot";
}

std::optional<FeatureSet> parse_feature_set(std::string_view name) {
  if (name == "pure_text") return FeatureSet::pure_text;
  if (name == "cot") return FeatureSet::cot;
  if (name == "hcot") return FeatureSet::hcot;
  return std::nullopt;
}

std::size_t FeatureSpec::dim() const {
  switch (set) {
    case FeatureSet::pure_text: return kPureTextDim;
    case FeatureSet::cot: return kCotDim;
    case FeatureSet::hcot: return kHcotDim;
  }
  return kHcotDim;
}

PolicyParams PolicyParams::zeros(std::size_t dim) {
  PolicyParams p;
  p.dim = dim;
  p.weights.assign(dim * kNumActions, 0.0);
  return p;
}

void PolicyParams::validate() const {
  if (weights.size() != dim * kNumActions) throw NumericError("policy: weight matrix has the wrong shape");
  for (std::size_t i = 0; i < parameter_count(); ++i) {
    if (!std::isfinite(param(i))) throw NumericError("policy: parameter " + std::to_string(i) + " is not finite");
  }
}

std::string_view to_string(LossMode mode) { return mode == LossMode::ce ? "ce" : "adaptive"; }

std::optional<LossMode> parse_loss_mode(std::string_view name) {
  if (name == "ce") return LossMode::ce;
  if (name == "adaptive") return LossMode::adaptive;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("train: alpha must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("train: beta must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("train: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("train: momentum must lie in [0, 1)");
  if (batch_size <= 0) throw ValidationError("train: batch size must be positive");
  if (epochs < 0) throw ValidationError("train: epochs must be non-negative");
}

double confidence_weight(double confidence, double alpha, double beta) {
  const double z = alpha * (confidence - beta);
  // Evaluated on the side that cannot overflow; exact 0.5 at z == 0.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::array<double, kNumActions> softmax_probs(const PolicyParams& params, const std::vector<double>& features) {
  check_shape(params, features);
  std::array<double, kNumActions> logits{};
  for (std::size_t a = 0; a < kNumActions; ++a) {
    double s = params.bias[a];
    const double* row = params.weights.data() + a * params.dim;
    for (std::size_t j = 0; j < params.dim; ++j) s += row[j] * features[j];
    logits[a] = s;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - m);
    z += l;
  }
  for (auto& l : logits) l /= z;
  return logits;
}

LossGrad ce_loss(const PolicyParams& params, const TrainingExample& example) {
  check_shape(params, example.features);
  check_finite(example.features);
  if (example.label < 0 || example.label >= static_cast<int>(kNumActions)) {
    throw NumericError("policy: label out of range");
  }
  // Log-softmax through the log-sum-exp so saturated logits stay exact.
  std::array<double, kNumActions> logits{};
  for (std::size_t a = 0; a < kNumActions; ++a) {
    double s = params.bias[a];
    const double* row = params.weights.data() + a * params.dim;
    for (std::size_t j = 0; j < params.dim; ++j) s += row[j] * example.features[j];
    logits[a] = s;
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double log_z = m + std::log(z);

  LossGrad out;
  out.loss = log_z - logits[static_cast<std::size_t>(example.label)];
  out.grad = PolicyParams::zeros(params.dim);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    const double delta = std::exp(logits[a] - log_z) - (static_cast<int>(a) == example.label ? 1.0 : 0.0);
    out.grad.bias[a] = delta;
    double* row = out.grad.weights.data() + a * params.dim;
    for (std::size_t j = 0; j < params.dim; ++j) row[j] = delta * example.features[j];
  }
  return out;
}

LossGrad adaptive_loss(const PolicyParams& params, const TrainingExample& example, double alpha, double beta) {
  if (!(alpha > 0.0)) throw ValidationError("adaptive loss: alpha must be positive");
  auto out = ce_loss(params, example);
  const double w = confidence_weight(example.confidence, alpha, beta);
  out.loss *= w;
  for (auto& g : out.grad.weights) g *= w;
  for (auto& g : out.grad.bias) g *= w;
  return out;
}

LossGrad example_loss(const PolicyParams& params, const TrainingExample& example, LossMode mode, double alpha,
                      double beta) {
  return mode == LossMode::ce ? ce_loss(params, example) : adaptive_loss(params, example, alpha, beta);
}

Prediction predict(const PolicyParams& params, const std::vector<double>& features) {
  Prediction p;
  p.probs = softmax_probs(params, features);
  std::size_t best = 0;
  for (std::size_t a = 1; a < kNumActions; ++a) {
    if (p.probs[a] > p.probs[best]) best = a;
  }
  p.action = action_at(best);
  return p;
}

double training_accuracy(const PolicyParams& params, const std::vector<TrainingExample>& dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : dataset) {
    hits += ordinal(predict(params, ex.features).action) == static_cast<std::size_t>(ex.label) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw ValidationError("train: dataset is empty");
  const std::size_t dim = dataset.front().features.size();
  for (const auto& ex : dataset) {
    if (ex.features.size() != dim) throw ValidationError("train: examples have inconsistent feature lengths");
  }

  TrainResult result;
  result.params = PolicyParams::zeros(dim);
  auto& params = result.params;
  std::vector<double> velocity(params.parameter_count(), 0.0);
  std::vector<double> grad(params.parameter_count(), 0.0);
  std::vector<std::size_t> order(dataset.size());
  Rng rng(mix_seed(config.seed, 0x747261696eULL));
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto lg = example_loss(params, dataset[order[k]], config.loss, config.alpha, config.beta);
        if (!std::isfinite(lg.loss)) {
          throw NumericError("train: loss diverged in epoch " + std::to_string(epoch));
        }
        loss_sum += lg.loss;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lg.grad.param(i);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = 0; i < grad.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] - config.learning_rate * grad[i] * scale;
        params.param(i) += velocity[i];
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(dataset.size());
    if (!std::isfinite(mean_loss)) throw NumericError("train: loss diverged in epoch " + std::to_string(epoch));
    params.validate();
    result.log.push_back({epoch, mean_loss, training_accuracy(params, dataset)});
  }
  return result;
}

double gradient_check(const PolicyParams& params, const TrainingExample& example, LossMode mode, double alpha,
                      double beta, double h) {
  const auto analytic = example_loss(params, example, mode, alpha, beta);
  PolicyParams probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.parameter_count(); ++i) {
    const double original = probe.param(i);
    probe.param(i) = original + h;
    const double up = example_loss(probe, example, mode, alpha, beta).loss;
    probe.param(i) = original - h;
    const double down = example_loss(probe, example, mode, alpha, beta).loss;
    probe.param(i) = original;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.grad.param(i);
    const double scale = std::max(std::abs(a), std::abs(numeric));
    const double err = scale >= 1e-5 ? std::abs(a - numeric) / scale : std::abs(a - numeric);
    worst = std::max(worst, err);
  }
  return worst;
}

TrainingExample featurize(const QARecord& record, const CategoryVocab& vocab, const FeatureSpec& spec) {
  TrainingExample ex;
  ex.features.assign(spec.dim(), 0.0);
  auto& x = ex.features;
  const auto& ctx = record.context;
  for (const auto& c : ctx.visible_categories) x[kBagOffset + vocab.index_of(c)] = 1.0;
  x[kTargetOffset + vocab.index_of(ctx.target_category)] = 1.0;
  if (ctx.previous_action) x[kLastActionOffset + ordinal(*ctx.previous_action)] = 1.0;
  x[kPitchOffset] = static_cast<double>(ctx.pitch);
  x[kStepOffset] = static_cast<double>(ctx.step_index) / static_cast<double>(kMaxEpisodeSteps);
  if (spec.set != FeatureSet::pure_text) x[kSuggestionOffset + ordinal(record.suggestion.action)] = 1.0;
  if (spec.set == FeatureSet::hcot) {
    x[kRoomOffset + static_cast<std::size_t>(record.inferred_room.room)] = 1.0;
    x[kRoomConfidenceOffset] = record.inferred_room.confidence;
    double best = 0.0;
    for (const auto& [name, score] : record.relevance_scores) {
      if (name != ctx.target_category) best = std::max(best, score);
    }
    x[kMaxRelevanceOffset] = best;
  }
  check_finite(x);
  ex.label = static_cast<int>(ordinal(record.label_action));
  ex.confidence = record.confidence;
  return ex;
}

std::vector<TrainingExample> featurize_all(const std::vector<QARecord>& records, const CategoryVocab& vocab,
                                           const FeatureSpec& spec) {
  std::vector<TrainingExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(featurize(r, vocab, spec));
  return out;
}

std::string format_model(const PolicyModel& model, std::string_view manifest_hash) {
  model.params.validate();
  OrderedJson j;
  j["kind"] = "policy_model";
  j["format_version"] = kModelFormatVersion;
  j["manifest_hash"] = std::string(manifest_hash);
  j["vocab_hash"] = model.vocab_hash;
  j["feature_set"] = to_string(model.spec.set);
  j["dim"] = model.params.dim;
  j["config"] = {{"loss", to_string(model.config.loss)},   {"alpha", model.config.alpha},
                 {"beta", model.config.beta},              {"learning_rate", model.config.learning_rate},
                 {"momentum", model.config.momentum},      {"batch_size", model.config.batch_size},
                 {"epochs", model.config.epochs},          {"seed", model.config.seed}};
  auto& rows = j["weights"] = OrderedJson::array();
  for (std::size_t a = 0; a < kNumActions; ++a) {
    rows.push_back(std::vector<double>(model.params.weights.begin() + static_cast<std::ptrdiff_t>(a * model.params.dim),
                                       model.params.weights.begin() + static_cast<std::ptrdiff_t>((a + 1) * model.params.dim)));
  }
  j["bias"] = model.params.bias;
  return j.dump(1) + "\n";
}

PolicyModel parse_model(std::string_view text, const CategoryVocab& vocab) {
  const Json j = parse_json(text, "model");
  PolicyModel m;
  try {
    if (j.at("kind").get<std::string>() != "policy_model") throw ParseError("model: wrong kind");
    if (j.at("format_version").get<int>() != kModelFormatVersion) throw ParseError("model: unsupported format_version");
    m.vocab_hash = j.at("vocab_hash").get<std::string>();
    auto set = parse_feature_set(j.at("feature_set").get<std::string>());
    if (!set) throw ParseError("model: unknown feature_set");
    m.spec.set = *set;
    const auto& c = j.at("config");
    auto loss = parse_loss_mode(c.at("loss").get<std::string>());
    if (!loss) throw ParseError("model: unknown loss mode");
    m.config.loss = *loss;
    m.config.alpha = c.at("alpha").get<double>();
    m.config.beta = c.at("beta").get<double>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.momentum = c.at("momentum").get<double>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.params = PolicyParams::zeros(j.at("dim").get<std::size_t>());
    const auto& rows = j.at("weights");
    if (rows.size() != kNumActions) throw ParseError("model: expected 6 weight rows");
    for (std::size_t a = 0; a < kNumActions; ++a) {
      const auto row = rows[a].get<std::vector<double>>();
      if (row.size() != m.params.dim) throw ParseError("model: weight row length mismatch");
      std::copy(row.begin(), row.end(), m.params.weights.begin() + static_cast<std::ptrdiff_t>(a * m.params.dim));
    }
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (bias.size() != kNumActions) throw ParseError("model: expected 6 bias entries");
    std::copy(bias.begin(), bias.end(), m.params.bias.begin());
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  if (m.params.dim != m.spec.dim()) throw ParseError("model: dimension does not match feature_set");
  if (m.vocab_hash != vocab.hash()) throw ValidationError("model: vocabulary hash mismatch");
  m.params.validate();
  return m;
}

void save_model(const PolicyModel& model, const std::filesystem::path& path, std::string_view manifest_hash) {
  write_file(path, format_model(model, manifest_hash));
}

PolicyModel load_model(const std::filesystem::path& path, const CategoryVocab& vocab) {
  return parse_model(read_file(path), vocab);
}

std::string format_training_log(const std::vector<EpochLog>& log, std::string_view manifest_hash) {
  std::vector<OrderedJson> rows;
  for (const auto& e : log) {
    OrderedJson r;
    r["epoch"] = e.epoch;
    r["mean_loss"] = e.mean_loss;
    r["accuracy"] = e.accuracy;
    rows.push_back(std::move(r));
  }
  return make_jsonl(jsonl_header("training_log", kTrainingLogFormatVersion, manifest_hash), rows);
}

std::vector<EpochLog> parse_training_log(std::string_view text) {
  const auto doc = parse_jsonl(text, "training_log");
  std::vector<EpochLog> out;
  try {
    for (const auto& r : doc.records) {
      out.push_back({r.at("epoch").get<int>(), r.at("mean_loss").get<double>(), r.at("accuracy").get<double>()});
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("training log: ") + e.what());
  }
  return out;
}

}  // namespace cotnav

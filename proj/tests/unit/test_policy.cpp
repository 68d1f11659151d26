#include <doctest.h>

#include <cmath>

#include "cotnav/annotator.hpp"
#include "cotnav/demonstrator.hpp"
#include "cotnav/episodes.hpp"
#include "cotnav/errors.hpp"
#include "cotnav/policy.hpp"
#include "cotnav/random.hpp"

using namespace cotnav;

namespace {

QARecord sample_record() {
  const Scene scene = generate_scene(6, 16, 16, 3);
  const auto ep = sample_episodes(scene, scene.categories_present(), 1, 6).front();
  const auto t = scripted_demo(scene, ep, 6);
  const auto records = annotate_trajectory(t, RuleBackend{}, CooccurrencePriors::defaults(), {});
  for (const auto& r : records) {
    if (!r.context.visible_categories.empty()) return r;
  }
  return records.front();
}

PolicyParams random_params(Rng& rng, std::size_t dim, double scale) {
  auto p = PolicyParams::zeros(dim);
  for (std::size_t i = 0; i < p.parameter_count(); ++i) p.param(i) = scale * (2.0 * rng.uniform() - 1.0);
  return p;
}

TrainingExample random_example(Rng& rng, std::size_t dim) {
  TrainingExample ex;
  ex.features.resize(dim);
  for (auto& f : ex.features) f = rng.bernoulli(0.3) ? 2.0 * rng.uniform() - 1.0 : 0.0;
  ex.label = static_cast<int>(rng.index(kNumActions));
  ex.confidence = rng.uniform();
  return ex;
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("feature layouts") {
    const auto r = sample_record();
    const auto& v = CategoryVocab::standard();
    const auto pure = featurize(r, v, {FeatureSet::pure_text});
    const auto cot = featurize(r, v, {FeatureSet::cot});
    const auto hcot = featurize(r, v, {FeatureSet::hcot});
    CHECK(pure.features.size() == 50);
    CHECK(cot.features.size() == 56);
    CHECK(hcot.features.size() == 66);
    for (std::size_t i = 0; i < pure.features.size(); ++i) CHECK(hcot.features[i] == pure.features[i]);
    for (std::size_t i = 0; i < cot.features.size(); ++i) CHECK(hcot.features[i] == cot.features[i]);
    CHECK(hcot.label == static_cast<int>(ordinal(r.label_action)));
    CHECK(hcot.confidence == r.confidence);
  }

  TEST_CASE("empty view gives a zero bag and pure text ignores the suggestion") {
    auto r = sample_record();
    r.context.visible_categories.clear();
    const auto& v = CategoryVocab::standard();
    const auto x = featurize(r, v, {FeatureSet::hcot}).features;
    for (std::size_t i = 0; i < 21; ++i) CHECK(x[i] == 0.0);
    double target_sum = 0.0;
    for (std::size_t i = 21; i < 42; ++i) target_sum += x[i];
    CHECK(target_sum == 1.0);

    auto other = r;
    other.suggestion.action = r.suggestion.action == Action::stop ? Action::turn_left : Action::stop;
    CHECK(featurize(r, v, {FeatureSet::pure_text}).features == featurize(other, v, {FeatureSet::pure_text}).features);
    CHECK(featurize(r, v, {FeatureSet::cot}).features != featurize(other, v, {FeatureSet::cot}).features);

    auto bad = r;
    bad.context.target_category = "piano";
    CHECK_THROWS_AS(featurize(bad, v, {FeatureSet::hcot}), VocabularyError);
  }

  TEST_CASE("cross-entropy values") {
    TrainingExample ex{std::vector<double>(4, 0.5), 2, 1.0};
    CHECK(ce_loss(PolicyParams::zeros(4), ex).loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(std::log(6.0) == doctest::Approx(1.7918).epsilon(1e-4));

    // Logits arranged so that p[label] = 0.25: three other classes share 0.75.
    auto p = PolicyParams::zeros(1);
    p.bias = {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25), -1e9, -1e9};
    TrainingExample one{{0.0}, 0, 1.0};
    CHECK(ce_loss(p, one).loss == doctest::Approx(1.3863).epsilon(1e-4));

    auto saturated = PolicyParams::zeros(1);
    saturated.bias[3] = 800.0;
    CHECK(ce_loss(saturated, TrainingExample{{0.0}, 3, 1.0}).loss == 0.0);

    TrainingExample bad{{std::nan("")}, 0, 1.0};
    CHECK_THROWS_AS(ce_loss(PolicyParams::zeros(1), bad), NumericError);
  }

  TEST_CASE("confidence weight values and algebra") {
    CHECK(confidence_weight(0.8, 10.0, 0.5) == doctest::Approx(0.95257).epsilon(1e-5));
    CHECK(confidence_weight(0.2, 10.0, 0.5) == doctest::Approx(0.04743).epsilon(1e-4));
    CHECK(confidence_weight(0.37, 4.0, 0.37) == 0.5);
    TrainingExample ex{std::vector<double>(3, 1.0), 1, 0.5};
    const auto p = PolicyParams::zeros(3);
    CHECK(adaptive_loss(p, ex, 10.0, 0.5).loss == doctest::Approx(0.5 * ce_loss(p, ex).loss));
    CHECK_THROWS_AS(adaptive_loss(p, ex, 0.0, 0.5), ValidationError);

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      const auto ex2 = random_example(rng, 5);
      const auto params = random_params(rng, 5, 1.0);
      const double a = adaptive_loss(params, ex2, 0.1 + 20.0 * rng.uniform(), rng.uniform()).loss;
      CHECK(a >= 0.0);
      CHECK(a <= ce_loss(params, ex2).loss);
    }
    auto sharp = TrainingExample{std::vector<double>(3, 1.0), 1, 1.0};
    CHECK(adaptive_loss(p, sharp, 1e4, 0.5).loss == doctest::Approx(ce_loss(p, sharp).loss).epsilon(1e-12));
  }

  TEST_CASE("analytic gradients match finite differences") {
    Rng rng(17);
    for (int i = 0; i < 100; ++i) {
      const auto ex = random_example(rng, 8);
      const auto params = random_params(rng, 8, 1.5);
      CHECK(gradient_check(params, ex, LossMode::ce, 10.0, 0.5) <= 1e-4);
      CHECK(gradient_check(params, ex, LossMode::adaptive, 10.0, 0.5) <= 1e-4);
    }
    auto saturated = PolicyParams::zeros(2);
    saturated.bias[1] = 40.0;
    CHECK(gradient_check(saturated, TrainingExample{{0.3, -0.2}, 1, 0.9}, LossMode::ce, 10.0, 0.5) <= 1e-7);
  }

  TEST_CASE("prediction") {
    const auto zero = predict(PolicyParams::zeros(4), std::vector<double>(4, 1.0));
    CHECK(zero.action == Action::move_forward);
    for (double p : zero.probs) CHECK(p == doctest::Approx(1.0 / 6.0));

    auto dominant = PolicyParams::zeros(2);
    dominant.w(4, 0) = 5.0;
    CHECK(predict(dominant, {1.0, 0.0}).action == Action::look_down);

    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
      const auto params = random_params(rng, 6, 3.0);
      const auto ex = random_example(rng, 6);
      double sum = 0.0;
      for (double p : predict(params, ex.features).probs) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }

  TEST_CASE("training separates a toy set and is deterministic") {
    Rng rng(8);
    std::vector<TrainingExample> data;
    for (int i = 0; i < 400; ++i) {
      const double a = 2.0 * rng.uniform() - 1.0;
      const double b = 2.0 * rng.uniform() - 1.0;
      if (std::abs(a - b) < 0.1) continue;  // margin
      data.push_back({{a, b, 1.0}, a > b ? 0 : 2, 1.0});
    }
    TrainConfig config;
    config.epochs = 50;
    const auto result = train(data, config);
    CHECK(result.log.size() == 50);
    CHECK(result.log.back().accuracy >= 0.99);
    CHECK(train(data, config).params == result.params);

    config.epochs = 0;
    CHECK(train(data, config).params == PolicyParams::zeros(3));
    CHECK_THROWS_AS(train({}, TrainConfig{}), ValidationError);
    config.alpha = -1.0;
    CHECK_THROWS_AS(train(data, config), ValidationError);
  }

  TEST_CASE("divergence aborts") {
    std::vector<TrainingExample> data = {{{1e300, -1e300}, 0, 1.0}, {{-1e300, 1e300}, 1, 1.0}};
    TrainConfig config;
    config.learning_rate = 10.0;
    config.epochs = 5;
    CHECK_THROWS_AS(train(data, config), NumericError);
  }

  TEST_CASE("model and log files round-trip") {
    Rng rng(4);
    PolicyModel m{random_params(rng, 66, 1.0), {FeatureSet::hcot}, TrainConfig{}, CategoryVocab::standard().hash()};
    m.config.loss = LossMode::adaptive;
    const auto text = format_model(m, "cafe");
    const auto back = parse_model(text);
    CHECK(back.params == m.params);
    CHECK(back.spec.set == FeatureSet::hcot);
    CHECK(back.config.loss == LossMode::adaptive);
    CHECK(format_model(back, "cafe") == text);
    CHECK_THROWS_AS(parse_model(text, CategoryVocab({"a", "b"})), ValidationError);
    CHECK_THROWS_AS(parse_model(text.substr(0, 100)), ParseError);

    const std::vector<EpochLog> log = {{1, 0.5, 0.25}, {2, 0.25, 0.5}};
    CHECK(parse_training_log(format_training_log(log)) == log);
  }
}

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cotnav/chat_client.hpp"
#include "cotnav/demonstrator.hpp"
#include "cotnav/io.hpp"
#include "cotnav/map_memory.hpp"
#include "cotnav/priors.hpp"
#include "cotnav/random.hpp"
#include "cotnav/simulator.hpp"

namespace cotnav {

inline constexpr int kQaFormatVersion = 1;
inline constexpr double kLogPriorEpsilon = 1e-6;

/// Round kinds in their fixed order: perception rounds, then planning rounds.
enum class RoundKind : std::uint8_t {
  subgoal_detection = 0,
  room_inference,
  object_association,
  plausibility,
  suggestion,
  action,
};
std::string_view to_string(RoundKind kind);
std::optional<RoundKind> parse_round_kind(std::string_view name);

enum class SuggestionKind : std::uint8_t { stop_here, approach, search_near, explore, target_absent, free_text };
std::string_view to_string(SuggestionKind kind);
std::optional<SuggestionKind> parse_suggestion_kind(std::string_view name);

/// Published phrase table: every executable phrase maps to exactly one action.
struct ActionPhrase {
  std::string_view phrase;
  Action action;
};
const std::array<ActionPhrase, kNumActions>& action_phrase_table();
std::string_view action_phrase(Action action);
std::optional<Action> action_from_phrase(std::string_view phrase);

struct QARound {
  RoundKind kind = RoundKind::subgoal_detection;
  std::string question;
  std::string answer;
  Json payload;

  bool operator==(const QARound&) const = default;
};

/// What the policy sees besides the reasoning: the ground-truth view and
/// proprioception at this step.
struct StepContext {
  std::string target_category;
  std::vector<std::string> visible_categories;  // one entry per visible instance
  int pitch = 0;
  int step_index = 0;
  std::optional<Action> previous_action;

  bool operator==(const StepContext&) const = default;
};

struct RoomInference {
  RoomType room = RoomType::unknown;
  double confidence = 0.0;

  bool operator==(const RoomInference&) const = default;
};

struct Suggestion {
  SuggestionKind kind = SuggestionKind::explore;
  std::string text;
  Action action = Action::stop;

  bool operator==(const Suggestion&) const = default;
};

struct QARecord {
  std::string episode_id;
  int step_index = 0;
  StepContext context;
  std::vector<QARound> rounds;
  std::map<std::string, double> relevance_scores;
  RoomInference inferred_room;
  Suggestion suggestion;
  Action label_action = Action::stop;
  double confidence = 0.0;
  double detection_confidence = 0.0;
  double alignment_score = 0.0;

  Action suggested_action() const { return suggestion.action; }
  /// Throws ValidationError when rounds are out of order, a score leaves [0, 1] or the action round disagrees with the suggestion.
  void validate() const;

  bool operator==(const QARecord&) const = default;
};

struct AnnotatorConfig {
  int success_radius_cells = 1;
  double plausibility_threshold = 0.3;
  double relevance_gate = 0.5;
  double detection_weight = 0.5;
  double alignment_weight = 0.5;
  double noise = 0.0;  // per-object drop / mislabel probability
  std::uint64_t seed = 0;
  int max_in_flight = 4;  // chat backend request pool
};

struct RuleBackend {};

struct ChatBackend {
  std::shared_ptr<const ChatClient> client;
  double temperature = 0.0;
};

using AnnotatorBackend = std::variant<RuleBackend, ChatBackend>;

struct Detection {
  /// Reported objects. Entries the backend could not ground in the
  /// observation carry instance_id -1 and an out-of-grid cell.
  std::vector<VisibleObject> objects;
  double detection_confidence = 1.0;
  std::string text;
};

/// Perturbs the observation's object list: each object is dropped or
/// relabelled (equal odds) with probability `noise`.
std::vector<VisibleObject> inject_noise(const std::vector<VisibleObject>& objects, double noise, Rng& rng,
                                        const CategoryVocab& vocab = CategoryVocab::standard());

/// Fraction of ground-truth objects reported with their true label.
double detection_recall(const std::vector<VisibleObject>& truth, const std::vector<VisibleObject>& reported);

/// Subgoal-detection round. The rule backend echoes `reported` (the
/// observation's objects unless noise was injected); the chat backend is
/// asked to list objects from a caption of `reported`, and its confidence is
/// the fraction of listed objects present in the ground-truth view.
Detection detect_subgoals(const Observation& observation, const AnnotatorBackend& backend,
                          const std::vector<VisibleObject>* reported = nullptr,
                          const CategoryVocab& vocab = CategoryVocab::standard());

/// argmax_r sum_o log(P(o | r) + eps), confidence = softmax probability of the
/// winner. Empty evidence yields (unknown, 0). Unknown names are ignored.
RoomInference infer_room(const std::vector<std::string>& subgoals, const CooccurrencePriors& priors,
                         const CategoryVocab& vocab = CategoryVocab::standard());

/// relevance(o) = object_object[o][target]. Throws VocabularyError for an
/// unknown target; unknown subgoal names are skipped.
std::map<std::string, double> associate_objects(const std::vector<std::string>& subgoals, std::string_view target,
                                                const CooccurrencePriors& priors,
                                                const CategoryVocab& vocab = CategoryVocab::standard());

/// Planning round for the rule backend. `perceived` is the observation with
/// its object list replaced by the detection result; `memory` already holds it.
Suggestion plan_suggestion(const RoomInference& room, const std::map<std::string, double>& relevance,
                           const Observation& perceived, const MapMemory& memory, const CooccurrencePriors& priors,
                           const AnnotatorConfig& config = {}, const CategoryVocab& vocab = CategoryVocab::standard());

/// 1 for identical actions, 0.5 for the same rotation or pitch pair, else 0.
double action_alignment(Action suggested, Action label);

/// c = w_d * detection + w_a * alignment(suggested, label).
double score_confidence(Action suggested, Action label, double detection_confidence, double detection_weight = 0.5,
                        double alignment_weight = 0.5);

/// Annotates one live step; the record's label is left equal to its suggestion.
/// `memory` is updated in place.
QARecord annotate_step(const Observation& observation, std::optional<Action> previous_action, MapMemory& memory,
                       const AnnotatorBackend& backend, const CooccurrencePriors& priors,
                       const AnnotatorConfig& config = {}, Rng* noise_rng = nullptr,
                       const CategoryVocab& vocab = CategoryVocab::standard());

/// One record per trajectory step. Deterministic under the rule backend (the
/// noise stream is seeded from config.seed and the episode id).
std::vector<QARecord> annotate_trajectory(const Trajectory& trajectory, const AnnotatorBackend& backend,
                                          const CooccurrencePriors& priors, const AnnotatorConfig& config = {},
                                          const CategoryVocab& vocab = CategoryVocab::standard());

/// Extracts the action from a planning reply whose last non-empty line is
/// `ACTION: <name>` (optionally inside a ``` fence). Throws AnnotationError.
Action parse_action_reply(std::string_view reply);
/// Extracts categories from a detection reply line `OBJECTS: a, b` or `OBJECTS: none`.
std::vector<std::string> parse_objects_reply(std::string_view reply);

OrderedJson qa_record_to_json(const QARecord& record);
QARecord qa_record_from_json(const Json& j);
std::string format_qa_dataset(const std::vector<QARecord>& records, std::string_view manifest_hash = "");
std::vector<QARecord> parse_qa_dataset(std::string_view text);
void save_qa_dataset(const std::vector<QARecord>& records, const std::filesystem::path& path,
                     std::string_view manifest_hash = "");
std::vector<QARecord> load_qa_dataset(const std::filesystem::path& path);

}  // namespace cotnav

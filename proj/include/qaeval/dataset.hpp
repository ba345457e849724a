#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qaeval::dataset {

enum class NaturalLanguage { en, nl };
enum class ExclusionReason { privacy, quality };

std::string to_string(NaturalLanguage lang);
std::string to_string(ExclusionReason reason);

struct NormalizedTestFailure {
    std::string test_name;
    std::string expected;
    std::string actual;
    std::optional<std::string> message;

    bool operator==(const NormalizedTestFailure&) const = default;
};

struct QuestionItem {
    std::string id;
    std::string question_text;
    std::optional<int> question_line;  // 1-based
    std::string submitted_code;
    std::string programming_language;
    NaturalLanguage natural_language = NaturalLanguage::en;
    std::string assignment_description;
    std::vector<NormalizedTestFailure> failing_tests;
    std::vector<std::string> lint_messages;
    std::optional<ExclusionReason> excluded;

    bool operator==(const QuestionItem&) const = default;
};

struct GroundTruthAnswer {
    std::string item_id;
    std::string identified_issue;
    std::string answer_for_student;

    bool operator==(const GroundTruthAnswer&) const = default;
};

struct RecordedHumanAnswer {
    std::string item_id;
    std::string answer_text;

    bool operator==(const RecordedHumanAnswer&) const = default;
};

struct EvalDataset {
    std::vector<QuestionItem> items;  // file order preserved
    std::map<std::string, GroundTruthAnswer> ground_truths;
    std::map<std::string, RecordedHumanAnswer> recorded_answers;

    const QuestionItem* find_item(const std::string& id) const;
    std::size_t active_count() const;
    std::size_t recorded_count() const { return recorded_answers.size(); }

    // Digest of the canonical serialization; identifies the dataset in run
    // reports so cross-run comparisons can check they used the same data.
    std::string digest() const;

    bool operator==(const EvalDataset&) const = default;
};

enum class DatasetFormat { jsonl };

// Loads and fully validates a dataset. Validation failures name the
// offending record id (or 1-based line for malformed lines).
EvalDataset load_dataset(const std::filesystem::path& path,
                         DatasetFormat format = DatasetFormat::jsonl);

std::string to_jsonl(const EvalDataset& dataset);
void save_dataset(const EvalDataset& dataset, const std::filesystem::path& path);

// Validates an in-memory dataset against all invariants; throws on the
// first violation.
void validate_dataset(const EvalDataset& dataset);
std::vector<std::string> dataset_violations(const EvalDataset& dataset);

struct FileValidation {
    std::size_t item_count = 0;
    std::size_t ground_truth_count = 0;
    std::size_t recorded_count = 0;
    std::vector<std::string> violations;
};

// Lenient pass for `validate`: collects every violation (parse-level ones
// carry the line number, semantic ones the record id) instead of stopping
// at the first.
FileValidation validate_file(const std::filesystem::path& path);

struct FilterResult {
    EvalDataset active;
    int removed_privacy = 0;
    int removed_quality = 0;
    std::vector<std::string> warnings;
};

// Drops excluded items (and their ground truths / recorded answers).
FilterResult filter_active(const EvalDataset& dataset);

// Uniform sample of n items without replacement; deterministic in
// (seed, n, dataset) across platforms; original item order is preserved.
EvalDataset sample(const EvalDataset& dataset, std::size_t n,
                   std::uint64_t seed);

enum class ScenarioTag { verbose, concise, other };

std::string to_string(ScenarioTag tag);

struct CalibrationRecord {
    std::string id;
    std::string generated_answer;
    std::string reference_answer;
    std::optional<int> sme_score;  // 0..5
    ScenarioTag scenario_tag = ScenarioTag::other;

    bool operator==(const CalibrationRecord&) const = default;
};

struct CalibrationLoad {
    std::vector<CalibrationRecord> records;
    int verbose_count = 0;
    int concise_count = 0;
    int other_count = 0;
    std::vector<std::string> warnings;
};

CalibrationLoad load_calibration(const std::filesystem::path& path);
void save_calibration(const std::vector<CalibrationRecord>& records,
                      const std::filesystem::path& path);

nlohmann::json to_json(const QuestionItem& item);
nlohmann::json to_json(const GroundTruthAnswer& gt);
nlohmann::json to_json(const RecordedHumanAnswer& answer);
nlohmann::json to_json(const CalibrationRecord& record);

}  // namespace qaeval::dataset

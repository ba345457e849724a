#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qaeval/dataset.hpp"

namespace qaeval::promptkit {

enum class PromptField {
    question,
    code,
    line_number,
    assignment,
    failing_tests,
    lint_messages,
    programming_language,
    natural_language,
};

inline constexpr std::array<PromptField, 8> kAllPromptFields = {
    PromptField::question,          PromptField::code,
    PromptField::line_number,       PromptField::assignment,
    PromptField::failing_tests,     PromptField::lint_messages,
    PromptField::programming_language, PromptField::natural_language,
};

// Fixed lowercase snake_case section tag; also the config-file name.
std::string_view field_tag(PromptField field);
std::optional<PromptField> field_from_tag(std::string_view tag);

enum class Technique { zero_shot, zero_shot_cot, one_shot };

std::string_view to_string(Technique technique);

struct PromptConfig {
    std::vector<PromptField> included_fields;
    Technique technique = Technique::zero_shot_cot;
    std::string instruction_text;
    std::optional<int> word_limit;
    // Worked example embedded before the data sections for one_shot.
    std::string one_shot_example;

    static PromptConfig default_config();
    void validate() const;  // no duplicates; question and code present
};

struct RenderedPrompt {
    std::string text;
    std::string config_hash;  // digest of (config, item id, field contents)
    std::string item_id;
};

RenderedPrompt build_prompt(const dataset::QuestionItem& item,
                            const PromptConfig& config);

struct AblationVariant {
    std::string label;  // "baseline", "-<field>" or "+<field>"
    PromptConfig config;
};

// Baseline plus one leave-one-out variant per droppable field, plus one
// add-one variant per field absent from the base.
std::vector<AblationVariant> ablation_configs(const PromptConfig& base);

// Path expressions into the raw (unconstrained) LMS test-result tree.
// Segments are separated by dots; "*" iterates array elements. Field paths
// are relative to a matched test node; empty paths skip that field.
struct TestResultPaths {
    std::string tests;          // path yielding test nodes
    std::string name;
    std::string expected;
    std::string actual;
    std::string message;
    std::string status;         // relative; compared against failing_value
    std::string failing_value;  // stringified value indicating a failure

    static TestResultPaths dodona_default();
};

struct NormalizeResult {
    std::vector<dataset::NormalizedTestFailure> failures;
    std::vector<std::string> warnings;
};

NormalizeResult normalize_test_results(const nlohmann::json& raw,
                                       const TestResultPaths& paths);

struct Section {
    std::string tag;
    std::string content;
};

// Recovers the delimited sections of a rendered prompt (tags on their own
// lines). Inverse of the section rendering in build_prompt.
std::vector<Section> extract_sections(std::string_view text);
std::string render_section(std::string_view tag, std::string_view content);

PromptConfig prompt_config_from_json(const nlohmann::json& j);
nlohmann::json prompt_config_to_json(const PromptConfig& config);
PromptConfig load_prompt_config(const std::filesystem::path& path);

}  // namespace qaeval::promptkit

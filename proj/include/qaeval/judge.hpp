#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qaeval/actors.hpp"
#include "qaeval/dataset.hpp"
#include "qaeval/promptkit.hpp"

namespace qaeval::judge {

// Six-level ordinal rubric; level 5 is a complete teaching-point match,
// level 0 a complete mismatch.
struct Rubric {
    std::array<std::string, 6> levels;
    std::string focus_statement;

    static Rubric default_rubric();
    void validate() const;
};

struct JudgeConfig {
    actors::ActorConfig judge_actor;
    Rubric rubric;
    int runs_per_item = 3;
    bool include_student_question = true;
    bool include_identified_issue = false;

    void validate() const;

    // Digest of everything that defines this judge; stored in run reports
    // so cross-run comparisons can verify they were scored the same way.
    std::string fingerprint() const;
};

struct JudgeVerdict {
    int score = 0;  // 0..5
    std::string justification;
    std::string raw_output;
};

struct ItemJudgement {
    std::string item_id;
    std::vector<JudgeVerdict> verdicts;  // length = runs_per_item
    double mean_score = 0.0;
    double judge_cost_cents = 0.0;  // summed over runs and retries
};

// The judge compares answers; its prompt carries the rubric, reference and
// generated answer (plus optional question / identified issue), never the
// student's code or the assignment.
promptkit::RenderedPrompt build_judge_prompt(
    const std::string& generated, const dataset::GroundTruthAnswer& reference,
    const std::optional<std::string>& question, const JudgeConfig& config);

// Extracts the last "SCORE: <n>" line; everything before it is the
// justification. Throws ErrorKind::parse when the line is missing or the
// score falls outside 0..5.
JudgeVerdict parse_verdict(const std::string& raw);

// runs_per_item invocations with distinct cache sub-keys; unparseable runs
// are retried up to the judge actor's max_retries before the whole item is
// reported failed.
ItemJudgement judge_answer(const std::string& generated,
                           const dataset::GroundTruthAnswer& reference,
                           const std::optional<std::string>& question,
                           const JudgeConfig& config,
                           actors::ActorInvoker& invoker);

Rubric rubric_from_json(const nlohmann::json& j);
nlohmann::json rubric_to_json(const Rubric& rubric);

JudgeConfig judge_config_from_json(const nlohmann::json& j);
nlohmann::json judge_config_to_json(const JudgeConfig& config);
JudgeConfig load_judge_config(const std::filesystem::path& path);

}  // namespace qaeval::judge

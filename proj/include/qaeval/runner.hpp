#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qaeval/actors.hpp"
#include "qaeval/dataset.hpp"
#include "qaeval/judge.hpp"
#include "qaeval/promptkit.hpp"
#include "qaeval/stats.hpp"

namespace qaeval::runner {

inline constexpr std::string_view kReportSchemaVersion = "1";

struct RunSpec {
    std::filesystem::path dataset_path;
    actors::ActorConfig actor;
    promptkit::PromptConfig prompt;
    judge::JudgeConfig judge;
    std::uint64_t seed = 0;
    int parallelism = 4;
    std::filesystem::path output_dir = "out";
    std::optional<std::size_t> sample_n;
    double failure_abort_fraction = 0.20;

    void validate() const;
    // Deterministic: hash of the spec plus the dataset digest.
    std::string run_id(const std::string& dataset_digest) const;
};

struct PerItemResult {
    std::string item_id;
    judge::ItemJudgement judgement;
    actors::ActorOutput output;
};

struct ItemFailure {
    std::string item_id;
    std::string reason;
};

struct RunReport {
    std::string schema_version{kReportSchemaVersion};
    std::string run_id;
    std::string dataset_digest;
    std::string judge_fingerprint;
    std::string actor_name;
    actors::ActorKind actor_kind = actors::ActorKind::scripted;
    std::string created_at;  // the only non-deterministic field
    std::vector<PerItemResult> per_item;  // sorted by item id
    std::vector<ItemFailure> failures;    // sorted by item id
    stats::ScoreDistribution distribution;
    double mean_score = 0.0;
    double mean_cost_cents = 0.0;
    double total_cost_cents = 0.0;
    double judge_total_cost_cents = 0.0;
};

// Executes the full pipeline for one actor: prompt -> invoke -> judge ->
// aggregate, fanning items out over `parallelism` workers, then persists
// the report under <output_dir>/runs/<run_id>/.
RunReport run_evaluation(const RunSpec& spec, actors::ActorInvoker& invoker);

// run_evaluation once per ablation variant, shared cache; a failing
// variant is reported and skipped, the others continue.
struct AblationRun {
    std::string label;
    std::optional<RunReport> report;
    std::string error;  // set when report is absent
};
std::vector<AblationRun> run_ablation(const RunSpec& spec,
                                      actors::ActorInvoker& invoker);
std::string ablation_csv(const std::vector<AblationRun>& runs);

struct RankingRow {
    std::string name;
    double mean_score = 0.0;
    double mean_cost_cents = 0.0;
    double delta_vs_baseline = 0.0;
    bool is_baseline = false;
};

// Rows sorted by mean score descending, ties by mean cost ascending then
// name. The baseline is the named row when given, else the recorded-human
// row, else the top row.
std::vector<RankingRow> compare_actors(const std::vector<RunReport>& reports,
                                       const std::string& baseline_name = "");
std::string ranking_csv(const std::vector<RankingRow>& rows);

struct ParetoPoint {
    std::string name;
    double mean_cost_cents = 0.0;
    double mean_score = 0.0;
    bool dominated = false;
};

// Dominated iff some other point has cost <= and score >= with at least
// one strict inequality; sorted by cost.
std::vector<ParetoPoint> pareto_points(const std::vector<RunReport>& reports);
std::vector<ParetoPoint> pareto_points(std::vector<ParetoPoint> points);
std::string pareto_csv(const std::vector<ParetoPoint>& points);

enum class AgreementPairing { per_run_average, pooled };

struct CalibrationResult {
    stats::AgreementReport agreement;
    std::vector<ItemFailure> failures;
    std::size_t judged = 0;
};

// Scores every calibration record runs_per_item times and pairs judge
// scores with SME scores. The confusion matrix pools all runs; the other
// statistics are averaged per run by default or pooled behind the flag.
// Per-record transcripts are persisted under `transcripts_dir` when given.
CalibrationResult calibrate_judge(
    const std::vector<dataset::CalibrationRecord>& records,
    const judge::JudgeConfig& config, actors::ActorInvoker& invoker,
    AgreementPairing pairing = AgreementPairing::per_run_average,
    const std::filesystem::path& transcripts_dir = {});

nlohmann::json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);
RunReport load_run_report(const std::filesystem::path& report_json);

// Writes report.json, summary.csv and distribution.csv into `dir`.
void write_run_report(const RunReport& report, const std::filesystem::path& dir);

RunSpec run_spec_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir);
RunSpec load_run_spec(const std::filesystem::path& path);

}  // namespace qaeval::runner

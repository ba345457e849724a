// qaeval: pre-deployment evaluation harness for LLM-based tools.
//
// Subcommands: validate, run, ablate, compare, calibrate, annotate,
// report, render. Exit codes: 0 success, 1 domain failure, 2
// environment/I-O failure.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qaeval/actors.hpp"
#include "qaeval/dataset.hpp"
#include "qaeval/errors.hpp"
#include "qaeval/judge.hpp"
#include "qaeval/promptkit.hpp"
#include "qaeval/runner.hpp"
#include "qaeval/stats.hpp"

namespace {

using nlohmann::json;
using namespace qaeval;

struct GlobalOptions {
    bool json_output = false;
    bool offline = false;
    bool verbose = false;
    std::string cache_dir = ".qaeval_cache";
    std::string config_path;

    json config;  // loaded from --config when given

    void load_config() {
        if (config_path.empty()) return;
        std::ifstream in(config_path);
        if (!in) fail(ErrorKind::io, "cannot open config: " + config_path);
        try {
            in >> config;
        } catch (const json::parse_error& e) {
            fail(ErrorKind::config,
                 "malformed config " + config_path + ": " + e.what());
        }
        if (config.contains("cache_dir") && cache_dir == ".qaeval_cache")
            cache_dir = config["cache_dir"].get<std::string>();
    }
};

void vlog(const GlobalOptions& global, const std::string& message) {
    if (global.verbose) std::fprintf(stderr, "qaeval: %s\n", message.c_str());
}

std::unique_ptr<actors::ActorInvoker> make_invoker(const GlobalOptions& global) {
    auto transport = global.offline ? actors::make_offline_transport()
                                    : actors::make_default_transport();
    auto cache = std::make_shared<actors::ResponseCache>(global.cache_dir);
    auto invoker = std::make_unique<actors::ActorInvoker>(
        std::move(transport), std::move(cache), global.offline);
    if (global.config.contains("provider_limits")) {
        for (const auto& [provider, limits] :
             global.config["provider_limits"].items()) {
            actors::ProviderLimits pl;
            pl.max_in_flight = limits.value("max_in_flight", 4);
            pl.requests_per_second = limits.value("requests_per_second", 0.0);
            invoker->set_provider_limits(provider, pl);
        }
    }
    return invoker;
}

std::string fmt(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// --- validate ---------------------------------------------------------

int cmd_validate(const GlobalOptions& global, const std::string& path) {
    const dataset::FileValidation result = dataset::validate_file(path);
    if (global.json_output) {
        json out{{"items", result.item_count},
                 {"ground_truths", result.ground_truth_count},
                 {"recorded_answers", result.recorded_count},
                 {"violations", result.violations},
                 {"valid", result.violations.empty()}};
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << result.item_count << " items, " << result.recorded_count
                  << " recorded answers\n";
        for (const auto& violation : result.violations)
            std::cout << "violation: " << violation << "\n";
        if (result.violations.empty()) std::cout << "OK\n";
    }
    return result.violations.empty() ? 0 : 1;
}

// --- run / ablate ------------------------------------------------------

struct RunOptions {
    std::string spec_path;
    std::string dataset;
    std::string actor;  // path or the literal "bah"
    std::string prompt;
    std::string judge;
    std::string price_table;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::optional<std::size_t> sample_n;
    std::string output_dir;
};

runner::RunSpec resolve_spec(const GlobalOptions& global,
                             const RunOptions& opts) {
    runner::RunSpec spec;
    if (!opts.spec_path.empty()) {
        spec = runner::load_run_spec(opts.spec_path);
    } else {
        spec.prompt = promptkit::PromptConfig::default_config();
    }
    if (!opts.dataset.empty()) spec.dataset_path = opts.dataset;
    if (!opts.actor.empty()) {
        if (opts.actor == "bah") {
            actors::ActorConfig bah;
            bah.name = "bah";
            bah.kind = actors::ActorKind::recorded_human;
            spec.actor = bah;
        } else {
            spec.actor = actors::load_actor_config(opts.actor);
        }
    }
    if (!opts.prompt.empty())
        spec.prompt = promptkit::load_prompt_config(opts.prompt);
    if (!opts.judge.empty()) spec.judge = judge::load_judge_config(opts.judge);
    if (opts.seed) spec.seed = *opts.seed;
    if (opts.parallelism) spec.parallelism = *opts.parallelism;
    if (opts.sample_n) spec.sample_n = *opts.sample_n;
    if (!opts.output_dir.empty()) spec.output_dir = opts.output_dir;

    std::string price_table = opts.price_table;
    if (price_table.empty() && global.config.contains("price_table"))
        price_table = global.config["price_table"].get<std::string>();
    if (!price_table.empty()) {
        std::ifstream in(price_table);
        if (!in) fail(ErrorKind::io, "cannot open price table: " + price_table);
        json table;
        in >> table;
        if (spec.actor.kind == actors::ActorKind::llm && !spec.actor.price)
            spec.actor.price = actors::lookup_price(table, spec.actor.provider,
                                                    spec.actor.model_id);
        if (spec.judge.judge_actor.kind == actors::ActorKind::llm &&
            !spec.judge.judge_actor.price)
            spec.judge.judge_actor.price =
                actors::lookup_price(table, spec.judge.judge_actor.provider,
                                     spec.judge.judge_actor.model_id);
    }
    return spec;
}

void print_report_summary(const runner::RunReport& report) {
    std::cout << "run " << report.run_id << "  actor " << report.actor_name
              << "\n";
    std::cout << "  items judged: " << report.per_item.size()
              << ", failed: " << report.failures.size() << "\n";
    std::cout << "  mean score: " << fmt(report.mean_score) << "\n";
    for (const auto& [threshold, pct] : report.distribution.pct_at_least)
        std::cout << "  score >= " << threshold << ": " << fmt(pct, 2) << "%\n";
    std::cout << "  mean cost: " << fmt(report.mean_cost_cents, 4)
              << " cents, total: " << fmt(report.total_cost_cents, 4)
              << " cents\n";
    for (const auto& failure : report.failures)
        std::cout << "  failed " << failure.item_id << ": " << failure.reason
                  << "\n";
}

int cmd_run(const GlobalOptions& global, const RunOptions& opts) {
    runner::RunSpec spec = resolve_spec(global, opts);
    auto invoker = make_invoker(global);
    const runner::RunReport report = runner::run_evaluation(spec, *invoker);
    vlog(global, "report written to " +
                     (spec.output_dir / "runs" / report.run_id).string());
    if (global.json_output)
        std::cout << runner::report_to_json(report).dump(2) << "\n";
    else
        print_report_summary(report);
    return 0;
}

int cmd_ablate(const GlobalOptions& global, const RunOptions& opts) {
    runner::RunSpec spec = resolve_spec(global, opts);
    auto invoker = make_invoker(global);
    const auto runs = runner::run_ablation(spec, *invoker);

    std::filesystem::create_directories(spec.output_dir);
    const auto csv_path = spec.output_dir / "ablation.csv";
    {
        std::ofstream out(csv_path, std::ios::binary);
        out << runner::ablation_csv(runs);
    }

    if (global.json_output) {
        json out = json::array();
        for (const auto& run : runs) {
            json row{{"label", run.label}};
            if (run.report) {
                row["mean_score"] = run.report->mean_score;
                row["run_id"] = run.report->run_id;
            } else {
                row["error"] = run.error;
            }
            out.push_back(std::move(row));
        }
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "label              mean_score\n";
        for (const auto& run : runs) {
            std::printf("%-18s %s\n", run.label.c_str(),
                        run.report ? fmt(run.report->mean_score).c_str()
                                   : ("FAILED: " + run.error).c_str());
        }
        std::cout << "table written to " << csv_path.string() << "\n";
    }
    return 0;
}

// --- compare -----------------------------------------------------------

int cmd_compare(const GlobalOptions& global,
                const std::vector<std::string>& report_paths,
                const std::string& baseline, const std::string& csv_out,
                const std::string& pareto_out) {
    std::vector<runner::RunReport> reports;
    reports.reserve(report_paths.size());
    for (const auto& path : report_paths)
        reports.push_back(runner::load_run_report(path));

    const auto rows = runner::compare_actors(reports, baseline);
    const auto points = runner::pareto_points(reports);

    if (!csv_out.empty()) {
        std::ofstream out(csv_out, std::ios::binary);
        out << runner::ranking_csv(rows);
    }
    if (!pareto_out.empty()) {
        std::ofstream out(pareto_out, std::ios::binary);
        out << runner::pareto_csv(points);
    }

    if (global.json_output) {
        json ranking = json::array();
        for (const auto& row : rows)
            ranking.push_back(json{{"name", row.name},
                                   {"mean_score", row.mean_score},
                                   {"mean_cost_cents", row.mean_cost_cents},
                                   {"delta_vs_baseline", row.delta_vs_baseline},
                                   {"baseline", row.is_baseline}});
        json pareto = json::array();
        for (const auto& p : points)
            pareto.push_back(json{{"name", p.name},
                                  {"mean_cost_cents", p.mean_cost_cents},
                                  {"mean_score", p.mean_score},
                                  {"dominated", p.dominated}});
        std::cout << json{{"ranking", ranking}, {"pareto", pareto}}.dump(2)
                  << "\n";
    } else {
        std::printf("%-4s %-24s %10s %12s %8s\n", "rank", "name", "mean",
                    "cost_cents", "delta");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            std::printf("%-4zu %-24s %10s %12s %8s%s\n", i + 1,
                        row.name.c_str(), fmt(row.mean_score).c_str(),
                        fmt(row.mean_cost_cents, 4).c_str(),
                        fmt(row.delta_vs_baseline).c_str(),
                        row.is_baseline ? "  (baseline)" : "");
        }
    }
    return 0;
}

// --- calibrate ----------------------------------------------------------

int cmd_calibrate(const GlobalOptions& global, const std::string& records_path,
                  const std::string& judge_path,
                  const std::string& scripted_judge, bool pooled,
                  const std::string& output_dir, bool transcripts) {
    dataset::CalibrationLoad load = dataset::load_calibration(records_path);
    for (const auto& warning : load.warnings)
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
    vlog(global, "calibration records: " + std::to_string(load.records.size()) +
                     " (verbose " + std::to_string(load.verbose_count) +
                     ", concise " + std::to_string(load.concise_count) +
                     ", other " + std::to_string(load.other_count) + ")");

    judge::JudgeConfig config;
    if (!scripted_judge.empty()) {
        // Self-test judges: echo answers each record's SME score; plus1
        // shifts it up one, clamped to 5.
        actors::ActorConfig actor;
        actor.name = "scripted-judge-" + scripted_judge;
        actor.kind = actors::ActorKind::scripted;
        for (const auto& record : load.records) {
            if (!record.sme_score) continue;
            int score = *record.sme_score;
            if (scripted_judge == "plus1") score = std::min(score + 1, 5);
            actor.script[record.id] =
                "Scripted verdict.\nSCORE: " + std::to_string(score);
        }
        config.judge_actor = std::move(actor);
        config.rubric = judge::Rubric::default_rubric();
    } else if (!judge_path.empty()) {
        config = judge::load_judge_config(judge_path);
    } else {
        fail(ErrorKind::config, "calibrate needs --judge or --scripted-judge");
    }

    auto invoker = make_invoker(global);
    const std::filesystem::path out_dir =
        output_dir.empty() ? std::filesystem::path("out/calibration")
                           : std::filesystem::path(output_dir);
    const runner::CalibrationResult result = runner::calibrate_judge(
        load.records, config, *invoker,
        pooled ? runner::AgreementPairing::pooled
               : runner::AgreementPairing::per_run_average,
        transcripts ? out_dir / "transcripts" : std::filesystem::path{});

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "agreement.json", std::ios::binary);
        json j = stats::to_json(result.agreement);
        j["judged"] = result.judged;
        j["failures"] = json::array();
        for (const auto& f : result.failures)
            j["failures"].push_back(
                json{{"id", f.item_id}, {"reason", f.reason}});
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "agreement.csv", std::ios::binary);
        out << stats::agreement_csv(result.agreement);
    }
    {
        std::ofstream out(out_dir / "confusion.svg", std::ios::binary);
        out << stats::confusion_svg(result.agreement.confusion);
    }

    if (global.json_output) {
        json j = stats::to_json(result.agreement);
        j["judged"] = result.judged;
        std::cout << j.dump(2) << "\n";
    } else {
        const auto& a = result.agreement;
        std::cout << "kappa_w = " << fmt(a.kappa_w) << "\n";
        std::cout << "pearson_r = " << fmt(a.pearson_r, 4) << "\n";
        std::cout << "spearman_rho = " << fmt(a.spearman_rho, 4) << "\n";
        std::cout << "kendall_tau = " << fmt(a.kendall_tau, 4) << "\n";
        std::cout << "exact = " << fmt(a.exact_pct, 2) << "%\n";
        std::cout << "within1 = " << fmt(a.within1_pct, 2) << "%\n";
        std::cout << "judged " << result.judged << " records, "
                  << result.failures.size() << " failures\n";
        std::cout << "artifacts in " << out_dir.string() << "\n";
    }
    return 0;
}

// --- annotate -----------------------------------------------------------

int cmd_annotate(const GlobalOptions& global, const std::string& records_path,
                 bool resume, const std::string& rubric_path, bool assume_tty) {
    if (!assume_tty && isatty(fileno(stdin)) == 0)
        fail(ErrorKind::io, "annotate needs an interactive terminal "
                            "(or --assume-tty for scripted sessions)");

    dataset::CalibrationLoad load = dataset::load_calibration(records_path);
    if (load.records.empty()) {
        std::cout << "nothing to annotate\n";
        return 0;
    }

    judge::Rubric rubric = judge::Rubric::default_rubric();
    if (!rubric_path.empty()) {
        std::ifstream in(rubric_path);
        if (!in) fail(ErrorKind::io, "cannot open rubric: " + rubric_path);
        json j;
        in >> j;
        rubric = judge::rubric_from_json(j);
    }

    std::size_t cursor = 0;
    if (resume) {
        while (cursor < load.records.size() &&
               load.records[cursor].sme_score.has_value())
            ++cursor;
    }

    (void)global;
    while (cursor < load.records.size()) {
        const auto& record = load.records[cursor];
        std::cout << "\n--- record " << (cursor + 1) << "/"
                  << load.records.size() << ": " << record.id << " ["
                  << dataset::to_string(record.scenario_tag) << "]";
        if (record.sme_score)
            std::cout << " (already scored " << *record.sme_score << ")";
        std::cout << "\n\n";
        std::cout << "GENERATED ANSWER\n" << record.generated_answer << "\n\n";
        std::cout << "REFERENCE ANSWER\n" << record.reference_answer << "\n\n";
        std::cout << "RUBRIC\n";
        for (std::size_t level = 0; level < rubric.levels.size(); ++level)
            std::cout << "  " << level << ": " << rubric.levels[level] << "\n";
        std::cout << "\nscore [0-5], s(kip), q(uit) > " << std::flush;

        std::string input;
        if (!std::getline(std::cin, input)) break;  // EOF quits
        if (input.empty()) continue;
        const char key = input[0];
        if (key == 'q') break;
        if (key == 's') {
            ++cursor;
            continue;
        }
        if (key >= '0' && key <= '5') {
            load.records[cursor].sme_score = key - '0';
            // Committed before the cursor advances: a crash loses nothing.
            dataset::save_calibration(load.records, records_path);
            ++cursor;
            continue;
        }
        std::cout << "unrecognized input\n";
    }

    std::size_t scored = 0;
    for (const auto& record : load.records)
        if (record.sme_score) ++scored;
    std::cout << "\n" << scored << "/" << load.records.size()
              << " records scored\n";
    return 0;
}

// --- report -------------------------------------------------------------

int cmd_report(const GlobalOptions& global, std::vector<std::string> paths,
               const std::string& csv_out) {
    std::vector<runner::RunReport> reports;
    for (const auto& arg : paths) {
        const std::filesystem::path path(arg);
        if (std::filesystem::is_directory(path)) {
            for (const auto& entry :
                 std::filesystem::directory_iterator(path)) {
                const auto report_json = entry.path() / "report.json";
                if (std::filesystem::exists(report_json))
                    reports.push_back(runner::load_run_report(report_json));
            }
        } else {
            reports.push_back(runner::load_run_report(path));
        }
    }
    if (reports.empty()) fail(ErrorKind::validation, "no reports found");
    std::sort(reports.begin(), reports.end(),
              [](const runner::RunReport& a, const runner::RunReport& b) {
                  return a.run_id < b.run_id;
              });

    std::ostringstream csv;
    csv << "run_id,actor,n,mean_score,pct_at_least_3,pct_at_least_4,"
           "mean_cost_cents,total_cost_cents\n";
    for (const auto& r : reports) {
        const auto p3 = r.distribution.pct_at_least.find(3);
        const auto p4 = r.distribution.pct_at_least.find(4);
        csv << r.run_id << "," << r.actor_name << "," << r.per_item.size()
            << "," << fmt(r.mean_score, 6) << ","
            << (p3 != r.distribution.pct_at_least.end() ? fmt(p3->second, 2) : "")
            << ","
            << (p4 != r.distribution.pct_at_least.end() ? fmt(p4->second, 2) : "")
            << "," << fmt(r.mean_cost_cents, 6) << ","
            << fmt(r.total_cost_cents, 6) << "\n";
    }
    if (!csv_out.empty()) {
        std::ofstream out(csv_out, std::ios::binary);
        out << csv.str();
    }

    if (global.json_output) {
        json out = json::array();
        for (const auto& r : reports) {
            out.push_back(json{{"run_id", r.run_id},
                               {"actor", r.actor_name},
                               {"n", r.per_item.size()},
                               {"mean_score", r.mean_score},
                               {"mean_cost_cents", r.mean_cost_cents},
                               {"total_cost_cents", r.total_cost_cents},
                               {"distribution", stats::to_json(r.distribution)}});
        }
        std::cout << out.dump(2) << "\n";
    } else {
        std::printf("%-18s %-20s %5s %10s %8s %8s %12s\n", "run_id", "actor",
                    "n", "mean", ">=3", ">=4", "cost_cents");
        for (const auto& r : reports) {
            const auto p3 = r.distribution.pct_at_least.find(3);
            const auto p4 = r.distribution.pct_at_least.find(4);
            std::printf(
                "%-18s %-20s %5zu %10s %7s%% %7s%% %12s\n", r.run_id.c_str(),
                r.actor_name.c_str(), r.per_item.size(),
                fmt(r.mean_score).c_str(),
                p3 != r.distribution.pct_at_least.end() ? fmt(p3->second, 2).c_str() : "-",
                p4 != r.distribution.pct_at_least.end() ? fmt(p4->second, 2).c_str() : "-",
                fmt(r.mean_cost_cents, 4).c_str());
        }
    }
    return 0;
}

// --- render -------------------------------------------------------------

int cmd_render(const GlobalOptions& global, const std::string& dataset_path,
               const std::string& item_id, const std::string& prompt_path) {
    const dataset::EvalDataset data = dataset::load_dataset(dataset_path);
    const dataset::QuestionItem* item = data.find_item(item_id);
    if (item == nullptr)
        fail(ErrorKind::validation, "unknown item \"" + item_id + "\"");
    promptkit::PromptConfig config =
        prompt_path.empty() ? promptkit::PromptConfig::default_config()
                            : promptkit::load_prompt_config(prompt_path);
    const promptkit::RenderedPrompt prompt = promptkit::build_prompt(*item, config);
    if (global.json_output) {
        std::cout << json{{"item_id", prompt.item_id},
                          {"config_hash", prompt.config_hash},
                          {"text", prompt.text}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << prompt.text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-agnostic pre-deployment evaluation harness for "
                 "LLM-based tools"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_flag("--json", global.json_output, "machine-readable output");
    app.add_flag("--offline", global.offline,
                 "forbid network use; cache and scripted actors only");
    app.add_flag("--verbose", global.verbose, "log progress to stderr");
    app.add_option("--cache-dir", global.cache_dir, "response cache directory");
    app.add_option("--config", global.config_path,
                   "harness config file (cache dir, price table, provider "
                   "limits)");

    // validate
    std::string validate_path;
    auto* validate =
        app.add_subcommand("validate", "validate a dataset file");
    validate->add_option("dataset", validate_path, "dataset JSONL path")
        ->required();

    // run / ablate share options
    RunOptions run_opts;
    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--spec", run_opts.spec_path, "run spec JSON file");
        cmd->add_option("--dataset", run_opts.dataset, "dataset JSONL path");
        cmd->add_option("--actor", run_opts.actor,
                        "actor config path, or \"bah\" for the recorded "
                        "human baseline");
        cmd->add_option("--prompt", run_opts.prompt, "prompt config path");
        cmd->add_option("--judge", run_opts.judge, "judge config path");
        cmd->add_option("--price-table", run_opts.price_table,
                        "price table JSON file");
        cmd->add_option("--seed", run_opts.seed, "sampling seed");
        cmd->add_option("--parallelism", run_opts.parallelism,
                        "concurrent items");
        cmd->add_option("--sample", run_opts.sample_n,
                        "evaluate a sample of n items");
        cmd->add_option("-o,--output-dir", run_opts.output_dir,
                        "output directory (reports land in runs/<run_id>)");
    };
    auto* run = app.add_subcommand("run", "evaluate one actor over a dataset");
    add_run_options(run);
    auto* ablate =
        app.add_subcommand("ablate", "leave-one-out prompt-field ablation");
    add_run_options(ablate);

    // compare
    std::vector<std::string> compare_paths;
    std::string compare_baseline, compare_csv, compare_pareto;
    auto* compare =
        app.add_subcommand("compare", "rank persisted run reports");
    compare->add_option("reports", compare_paths, "report.json paths")
        ->required()
        ->expected(-1);
    compare->add_option("--baseline", compare_baseline,
                        "baseline actor name (default: the recorded-human "
                        "row when present)");
    compare->add_option("--csv", compare_csv, "write ranking CSV here");
    compare->add_option("--pareto", compare_pareto, "write pareto CSV here");

    // calibrate
    std::string cal_records, cal_judge, cal_scripted, cal_out;
    bool cal_pooled = false, cal_transcripts = false;
    auto* calibrate = app.add_subcommand(
        "calibrate", "align the judge against SME-scored records");
    calibrate->add_option("--records", cal_records, "calibration JSONL path")
        ->required();
    calibrate->add_option("--judge", cal_judge, "judge config path");
    calibrate->add_option("--scripted-judge", cal_scripted,
                          "self-test judge: echo | plus1");
    calibrate->add_flag("--pooled", cal_pooled,
                        "pool run pairs instead of averaging per-run stats");
    calibrate->add_option("-o,--output-dir", cal_out,
                          "where agreement.{json,csv} and confusion.svg go");
    calibrate->add_flag("--transcripts", cal_transcripts,
                        "persist per-record judge transcripts");

    // annotate
    std::string ann_records, ann_rubric;
    bool ann_resume = false, ann_assume_tty = false;
    auto* annotate = app.add_subcommand(
        "annotate", "interactive SME scoring of calibration records");
    annotate->add_option("records", ann_records, "calibration JSONL path")
        ->required();
    annotate->add_flag("--resume", ann_resume,
                       "continue at the first unscored record");
    annotate->add_option("--rubric", ann_rubric, "rubric JSON file");
    annotate->add_flag("--assume-tty", ann_assume_tty,
                       "skip the interactive-terminal check");

    // report
    std::vector<std::string> report_paths;
    std::string report_csv;
    auto* report =
        app.add_subcommand("report", "summarize persisted run reports");
    report->add_option("paths", report_paths,
                       "report.json files or a runs/ directory")
        ->required()
        ->expected(-1);
    report->add_option("--csv", report_csv, "write the summary CSV here");

    // render
    std::string render_dataset, render_item, render_prompt;
    auto* render = app.add_subcommand(
        "render", "print the rendered prompt for one item");
    render->add_option("--dataset", render_dataset, "dataset JSONL path")
        ->required();
    render->add_option("--item", render_item, "item id")->required();
    render->add_option("--prompt", render_prompt, "prompt config path");

    CLI11_PARSE(app, argc, argv);

    try {
        global.load_config();
        if (app.got_subcommand(validate))
            return cmd_validate(global, validate_path);
        if (app.got_subcommand(run)) return cmd_run(global, run_opts);
        if (app.got_subcommand(ablate)) return cmd_ablate(global, run_opts);
        if (app.got_subcommand(compare))
            return cmd_compare(global, compare_paths, compare_baseline,
                               compare_csv, compare_pareto);
        if (app.got_subcommand(calibrate))
            return cmd_calibrate(global, cal_records, cal_judge, cal_scripted,
                                 cal_pooled, cal_out, cal_transcripts);
        if (app.got_subcommand(annotate))
            return cmd_annotate(global, ann_records, ann_resume, ann_rubric,
                                ann_assume_tty);
        if (app.got_subcommand(report))
            return cmd_report(global, report_paths, report_csv);
        if (app.got_subcommand(render))
            return cmd_render(global, render_dataset, render_item,
                              render_prompt);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return (e.kind() == ErrorKind::io || e.kind() == ErrorKind::credentials)
                   ? 2
                   : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

#include "qaeval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"
#include "qaeval/hash.hpp"

namespace qaeval::runner {

namespace {

using nlohmann::json;

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json spec_identity(const RunSpec& spec) {
    // output_dir and the dataset's location are not part of a run's
    // identity; the dataset digest covers the data itself.
    json j{
        {"actor", actors::actor_config_to_json(spec.actor)},
        {"prompt", promptkit::prompt_config_to_json(spec.prompt)},
        {"judge", judge::judge_config_to_json(spec.judge)},
        {"seed", spec.seed},
        {"parallelism", spec.parallelism},
        {"failure_abort_fraction", spec.failure_abort_fraction},
    };
    if (spec.sample_n) j["sample_n"] = *spec.sample_n;
    return j;
}

}  // namespace

void RunSpec::validate() const {
    if (parallelism < 1)
        fail(ErrorKind::config, "parallelism must be >= 1");
    if (failure_abort_fraction < 0.0 || failure_abort_fraction > 1.0)
        fail(ErrorKind::config, "failure_abort_fraction must lie in [0,1]");
    actor.validate();
    prompt.validate();
    judge.validate();
}

std::string RunSpec::run_id(const std::string& dataset_digest) const {
    json j = spec_identity(*this);
    j["dataset_digest"] = dataset_digest;
    return sha256_hex(j.dump()).substr(0, 16);
}

RunReport run_evaluation(const RunSpec& spec, actors::ActorInvoker& invoker) {
    spec.validate();

    const dataset::EvalDataset loaded = dataset::load_dataset(spec.dataset_path);
    const std::string digest = loaded.digest();

    dataset::EvalDataset active = dataset::filter_active(loaded).active;
    if (spec.sample_n)
        active = dataset::sample(active, *spec.sample_n, spec.seed);
    if (active.items.empty())
        fail(ErrorKind::validation, "nothing to evaluate: no active items in " +
                                        spec.dataset_path.string());

    const std::size_t total = active.items.size();
    const double abort_limit =
        spec.failure_abort_fraction * static_cast<double>(total);

    std::vector<PerItemResult> per_item;
    std::vector<ItemFailure> failures;
    std::mutex results_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};

    auto evaluate_item = [&](const dataset::QuestionItem& item) {
        actors::ActorOutput output;
        if (spec.actor.kind == actors::ActorKind::recorded_human) {
            // BAH skips the prompt/actor path: educator answers are judged
            // exactly like generated ones.
            auto recorded = actors::recorded_answer(active, item.id);
            if (!recorded)
                fail(ErrorKind::validation, "no recorded answer");
            output = *recorded;
        } else {
            const promptkit::RenderedPrompt prompt =
                promptkit::build_prompt(item, spec.prompt);
            output = invoker.invoke(spec.actor, prompt);
        }

        const auto gt = active.ground_truths.find(item.id);
        if (gt == active.ground_truths.end())
            fail(ErrorKind::validation, "missing ground truth");

        judge::ItemJudgement judgement =
            judge::judge_answer(output.answer_text, gt->second,
                                item.question_text, spec.judge, invoker);

        std::lock_guard lock(results_mutex);
        per_item.push_back(PerItemResult{item.id, std::move(judgement),
                                         std::move(output)});
    };

    auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) break;
            const dataset::QuestionItem& item = active.items[i];
            try {
                evaluate_item(item);
            } catch (const Error& e) {
                std::lock_guard lock(results_mutex);
                failures.push_back(ItemFailure{item.id, e.what()});
                if (static_cast<double>(failures.size()) > abort_limit)
                    abort.store(true);
            }
        }
    };

    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(spec.parallelism), total);
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) workers.emplace_back(worker);
    for (auto& w : workers) w.join();

    if (abort.load())
        fail(ErrorKind::validation,
             "run aborted: " + std::to_string(failures.size()) + " of " +
                 std::to_string(total) + " items failed (threshold " +
                 fmt(spec.failure_abort_fraction) + ")");
    if (per_item.empty())
        fail(ErrorKind::validation, "run produced no judged items");

    std::sort(per_item.begin(), per_item.end(),
              [](const PerItemResult& a, const PerItemResult& b) {
                  return a.item_id < b.item_id;
              });
    std::sort(failures.begin(), failures.end(),
              [](const ItemFailure& a, const ItemFailure& b) {
                  return a.item_id < b.item_id;
              });

    RunReport report;
    report.run_id = spec.run_id(digest);
    report.dataset_digest = digest;
    report.judge_fingerprint = spec.judge.fingerprint();
    report.actor_name = spec.actor.name;
    report.actor_kind = spec.actor.kind;
    report.created_at = timestamp_utc();
    report.per_item = std::move(per_item);
    report.failures = std::move(failures);

    std::vector<double> scores;
    scores.reserve(report.per_item.size());
    for (const auto& r : report.per_item) {
        scores.push_back(r.judgement.mean_score);
        report.total_cost_cents += r.output.cost_cents;
        report.judge_total_cost_cents += r.judgement.judge_cost_cents;
    }
    report.distribution = stats::distribution(scores);
    report.mean_score = report.distribution.mean;
    report.mean_cost_cents =
        report.total_cost_cents / static_cast<double>(report.per_item.size());

    if (!spec.output_dir.empty())
        write_run_report(report, spec.output_dir / "runs" / report.run_id);
    return report;
}

std::vector<AblationRun> run_ablation(const RunSpec& spec,
                                      actors::ActorInvoker& invoker) {
    const auto variants = promptkit::ablation_configs(spec.prompt);
    std::vector<AblationRun> runs;
    runs.reserve(variants.size());
    for (const auto& variant : variants) {
        RunSpec variant_spec = spec;
        variant_spec.prompt = variant.config;
        AblationRun run;
        run.label = variant.label;
        try {
            run.report = run_evaluation(variant_spec, invoker);
        } catch (const Error& e) {
            run.error = e.what();
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

std::string ablation_csv(const std::vector<AblationRun>& runs) {
    std::ostringstream out;
    out << "label,mean_score,n,total_cost_cents,error\n";
    for (const auto& run : runs) {
        out << run.label << ",";
        if (run.report) {
            out << fmt(run.report->mean_score) << ","
                << run.report->per_item.size() << ","
                << fmt(run.report->total_cost_cents) << ",";
        } else {
            out << ",,," << "\"" << run.error << "\"";
        }
        out << "\n";
    }
    return out.str();
}

std::vector<RankingRow> compare_actors(const std::vector<RunReport>& reports,
                                       const std::string& baseline_name) {
    if (reports.empty())
        fail(ErrorKind::validation, "no reports to compare");
    for (const auto& r : reports) {
        if (r.dataset_digest != reports.front().dataset_digest)
            fail(ErrorKind::validation,
                 "reports mix dataset digests (\"" + r.actor_name + "\" differs)");
        if (r.judge_fingerprint != reports.front().judge_fingerprint)
            fail(ErrorKind::validation,
                 "reports mix judge configs (\"" + r.actor_name + "\" differs)");
    }

    std::vector<RankingRow> rows;
    rows.reserve(reports.size());
    for (const auto& r : reports)
        rows.push_back(RankingRow{r.actor_name, r.mean_score, r.mean_cost_cents,
                                  0.0, false});
    std::sort(rows.begin(), rows.end(),
              [](const RankingRow& a, const RankingRow& b) {
                  if (a.mean_score != b.mean_score)
                      return a.mean_score > b.mean_score;
                  if (a.mean_cost_cents != b.mean_cost_cents)
                      return a.mean_cost_cents < b.mean_cost_cents;
                  return a.name < b.name;
              });

    std::size_t baseline_idx = 0;
    bool found = false;
    if (!baseline_name.empty()) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].name == baseline_name) {
                baseline_idx = i;
                found = true;
                break;
            }
        if (!found)
            fail(ErrorKind::config,
                 "baseline \"" + baseline_name + "\" is not among the reports");
    } else {
        for (std::size_t i = 0; i < rows.size() && !found; ++i)
            for (const auto& r : reports)
                if (r.actor_name == rows[i].name &&
                    r.actor_kind == actors::ActorKind::recorded_human) {
                    baseline_idx = i;
                    found = true;
                    break;
                }
        // without a recorded-human row the top row anchors the deltas
    }

    rows[baseline_idx].is_baseline = true;
    const double baseline_mean = rows[baseline_idx].mean_score;
    for (auto& row : rows) row.delta_vs_baseline = row.mean_score - baseline_mean;
    return rows;
}

std::string ranking_csv(const std::vector<RankingRow>& rows) {
    std::ostringstream out;
    out << "rank,name,mean_score,mean_cost_cents,delta_vs_baseline,baseline\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        out << (i + 1) << "," << row.name << "," << fmt(row.mean_score) << ","
            << fmt(row.mean_cost_cents) << "," << fmt(row.delta_vs_baseline)
            << "," << (row.is_baseline ? "yes" : "no") << "\n";
    }
    return out.str();
}

std::vector<ParetoPoint> pareto_points(std::vector<ParetoPoint> points) {
    if (points.empty()) fail(ErrorKind::validation, "no points for pareto view");
    for (auto& p : points) {
        p.dominated = false;
        for (const auto& q : points) {
            if (&p == &q) continue;
            const bool no_worse = q.mean_cost_cents <= p.mean_cost_cents &&
                                  q.mean_score >= p.mean_score;
            const bool strictly_better = q.mean_cost_cents < p.mean_cost_cents ||
                                         q.mean_score > p.mean_score;
            if (no_worse && strictly_better) {
                p.dominated = true;
                break;
            }
        }
    }
    std::sort(points.begin(), points.end(),
              [](const ParetoPoint& a, const ParetoPoint& b) {
                  if (a.mean_cost_cents != b.mean_cost_cents)
                      return a.mean_cost_cents < b.mean_cost_cents;
                  return a.name < b.name;
              });
    return points;
}

std::vector<ParetoPoint> pareto_points(const std::vector<RunReport>& reports) {
    std::vector<ParetoPoint> points;
    points.reserve(reports.size());
    for (const auto& r : reports)
        points.push_back(
            ParetoPoint{r.actor_name, r.mean_cost_cents, r.mean_score, false});
    return pareto_points(std::move(points));
}

std::string pareto_csv(const std::vector<ParetoPoint>& points) {
    std::ostringstream out;
    out << "name,mean_cost_cents,mean_score,dominated\n";
    for (const auto& p : points)
        out << p.name << "," << fmt(p.mean_cost_cents) << ","
            << fmt(p.mean_score) << "," << (p.dominated ? "yes" : "no") << "\n";
    return out.str();
}

CalibrationResult calibrate_judge(
    const std::vector<dataset::CalibrationRecord>& records,
    const judge::JudgeConfig& config, actors::ActorInvoker& invoker,
    AgreementPairing pairing, const std::filesystem::path& transcripts_dir) {
    config.validate();
    if (records.empty())
        fail(ErrorKind::validation, "no calibration records");
    for (const auto& r : records)
        if (!r.sme_score)
            fail(ErrorKind::validation,
                 "calibration record \"" + r.id + "\" has no sme_score");

    if (!transcripts_dir.empty())
        std::filesystem::create_directories(transcripts_dir);

    const int runs = config.runs_per_item;
    std::vector<std::vector<int>> judge_by_run(static_cast<std::size_t>(runs));
    std::vector<int> sme_scores;
    CalibrationResult result;

    for (const auto& record : records) {
        dataset::GroundTruthAnswer reference;
        reference.item_id = record.id;
        reference.answer_for_student = record.reference_answer;

        judge::ItemJudgement judgement;
        try {
            judgement = judge::judge_answer(record.generated_answer, reference,
                                            std::nullopt, config, invoker);
        } catch (const Error& e) {
            result.failures.push_back(ItemFailure{record.id, e.what()});
            continue;
        }

        sme_scores.push_back(*record.sme_score);
        for (int run = 0; run < runs; ++run)
            judge_by_run[static_cast<std::size_t>(run)].push_back(
                judgement.verdicts[static_cast<std::size_t>(run)].score);

        if (!transcripts_dir.empty()) {
            const promptkit::RenderedPrompt prompt = judge::build_judge_prompt(
                record.generated_answer, reference, std::nullopt, config);
            json transcript{{"id", record.id},
                            {"sme_score", *record.sme_score},
                            {"prompt", prompt.text},
                            {"runs", json::array()}};
            for (const auto& verdict : judgement.verdicts)
                transcript["runs"].push_back(json{
                    {"score", verdict.score}, {"raw_output", verdict.raw_output}});
            std::string file_id = record.id;
            std::replace(file_id.begin(), file_id.end(), '/', '_');
            std::ofstream out(transcripts_dir / (file_id + ".json"));
            out << transcript.dump(2) << "\n";
        }
    }

    result.judged = sme_scores.size();
    if (result.judged == 0)
        fail(ErrorKind::validation, "judge failed on every calibration record");

    if (pairing == AgreementPairing::pooled) {
        std::vector<int> pooled_sme, pooled_judge;
        for (int run = 0; run < runs; ++run) {
            pooled_sme.insert(pooled_sme.end(), sme_scores.begin(),
                              sme_scores.end());
            const auto& scores = judge_by_run[static_cast<std::size_t>(run)];
            pooled_judge.insert(pooled_judge.end(), scores.begin(), scores.end());
        }
        result.agreement = stats::agreement_report(pooled_sme, pooled_judge);
        result.agreement.n = result.judged;
        return result;
    }

    // Per-run statistics, averaged; the confusion matrix pools every pair.
    stats::AgreementReport averaged;
    averaged.n = result.judged;
    for (int run = 0; run < runs; ++run) {
        const auto& scores = judge_by_run[static_cast<std::size_t>(run)];
        const stats::AgreementReport per_run =
            stats::agreement_report(sme_scores, scores);
        averaged.kappa_w += per_run.kappa_w;
        averaged.pearson_r += per_run.pearson_r;
        averaged.spearman_rho += per_run.spearman_rho;
        averaged.kendall_tau += per_run.kendall_tau;
        averaged.exact_pct += per_run.exact_pct;
        averaged.within1_pct += per_run.within1_pct;
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                averaged.confusion.counts[i][j] += per_run.confusion.counts[i][j];
    }
    const double r = static_cast<double>(runs);
    averaged.kappa_w /= r;
    averaged.pearson_r /= r;
    averaged.spearman_rho /= r;
    averaged.kendall_tau /= r;
    averaged.exact_pct /= r;
    averaged.within1_pct /= r;
    result.agreement = averaged;
    return result;
}

nlohmann::json report_to_json(const RunReport& report) {
    json per_item = json::array();
    for (const auto& r : report.per_item) {
        json scores = json::array();
        for (const auto& v : r.judgement.verdicts) scores.push_back(v.score);
        per_item.push_back(json{
            {"item_id", r.item_id},
            {"mean_score", r.judgement.mean_score},
            {"scores", scores},
            {"answer_text", r.output.answer_text},
            {"input_tokens", r.output.input_tokens},
            {"output_tokens", r.output.output_tokens},
            {"latency_ms", r.output.latency.count()},
            {"cost_cents", r.output.cost_cents},
            {"judge_cost_cents", r.judgement.judge_cost_cents},
        });
    }
    json failures = json::array();
    for (const auto& f : report.failures)
        failures.push_back(json{{"item_id", f.item_id}, {"reason", f.reason}});
    return json{
        {"schema_version", report.schema_version},
        {"run_id", report.run_id},
        {"dataset_digest", report.dataset_digest},
        {"judge_fingerprint", report.judge_fingerprint},
        {"actor", json{{"name", report.actor_name},
                       {"kind", actors::to_string(report.actor_kind)}}},
        {"created_at", report.created_at},
        {"per_item", per_item},
        {"failures", failures},
        {"distribution", stats::to_json(report.distribution)},
        {"mean_score", report.mean_score},
        {"mean_cost_cents", report.mean_cost_cents},
        {"total_cost_cents", report.total_cost_cents},
        {"judge_total_cost_cents", report.judge_total_cost_cents},
    };
}

RunReport report_from_json(const nlohmann::json& j) {
    RunReport report;
    report.schema_version = j.value("schema_version", std::string{"1"});
    report.run_id = j.at("run_id").get<std::string>();
    report.dataset_digest = j.at("dataset_digest").get<std::string>();
    report.judge_fingerprint = j.value("judge_fingerprint", std::string{});
    report.actor_name = j.at("actor").at("name").get<std::string>();
    const std::string kind = j.at("actor").at("kind").get<std::string>();
    report.actor_kind = kind == "llm"            ? actors::ActorKind::llm
                        : kind == "recorded_human" ? actors::ActorKind::recorded_human
                                                   : actors::ActorKind::scripted;
    report.created_at = j.value("created_at", std::string{});
    for (const auto& entry : j.value("per_item", json::array())) {
        PerItemResult r;
        r.item_id = entry.at("item_id").get<std::string>();
        r.judgement.item_id = r.item_id;
        r.judgement.mean_score = entry.at("mean_score").get<double>();
        for (const auto& s : entry.value("scores", json::array())) {
            judge::JudgeVerdict v;
            v.score = s.get<int>();
            r.judgement.verdicts.push_back(std::move(v));
        }
        r.judgement.judge_cost_cents = entry.value("judge_cost_cents", 0.0);
        r.output.item_id = r.item_id;
        r.output.answer_text = entry.value("answer_text", std::string{});
        r.output.input_tokens = entry.value("input_tokens", std::int64_t{0});
        r.output.output_tokens = entry.value("output_tokens", std::int64_t{0});
        r.output.latency =
            std::chrono::milliseconds(entry.value("latency_ms", std::int64_t{0}));
        r.output.cost_cents = entry.value("cost_cents", 0.0);
        report.per_item.push_back(std::move(r));
    }
    for (const auto& entry : j.value("failures", json::array()))
        report.failures.push_back(
            ItemFailure{entry.at("item_id").get<std::string>(),
                        entry.at("reason").get<std::string>()});
    const auto& dist = j.at("distribution");
    for (const auto& [bucket, count] : dist.at("histogram").items())
        report.distribution.histogram[std::stoi(bucket)] =
            count.get<std::int64_t>();
    for (const auto& [threshold, pct] : dist.at("pct_at_least").items())
        report.distribution.pct_at_least[std::stoi(threshold)] =
            pct.get<double>();
    report.distribution.mean = dist.at("mean").get<double>();
    report.distribution.n = dist.at("n").get<std::size_t>();
    report.mean_score = j.at("mean_score").get<double>();
    report.mean_cost_cents = j.at("mean_cost_cents").get<double>();
    report.total_cost_cents = j.at("total_cost_cents").get<double>();
    report.judge_total_cost_cents = j.value("judge_total_cost_cents", 0.0);
    return report;
}

RunReport load_run_report(const std::filesystem::path& report_json) {
    std::ifstream in(report_json);
    if (!in) fail(ErrorKind::io, "cannot open report: " + report_json.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::validation,
             "malformed report " + report_json.string() + ": " + e.what());
    }
    return report_from_json(j);
}

void write_run_report(const RunReport& report,
                      const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    {
        std::ofstream out(dir / "report.json", std::ios::binary);
        if (!out)
            fail(ErrorKind::io, "cannot write " + (dir / "report.json").string());
        out << report_to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "summary.csv", std::ios::binary);
        out << "item_id,mean_score,scores,input_tokens,output_tokens,latency_ms,"
               "cost_cents\n";
        for (const auto& r : report.per_item) {
            std::string scores;
            for (std::size_t i = 0; i < r.judgement.verdicts.size(); ++i) {
                if (i > 0) scores += ";";
                scores += std::to_string(r.judgement.verdicts[i].score);
            }
            out << r.item_id << "," << fmt(r.judgement.mean_score) << ","
                << scores << "," << r.output.input_tokens << ","
                << r.output.output_tokens << "," << r.output.latency.count()
                << "," << fmt(r.output.cost_cents) << "\n";
        }
        for (const auto& f : report.failures)
            out << f.item_id << ",,,,,,\"" << f.reason << "\"\n";
    }
    {
        std::ofstream out(dir / "distribution.csv", std::ios::binary);
        out << stats::distribution_csv(report.distribution);
    }
}

RunSpec run_spec_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir) {
    RunSpec spec;
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    if (!j.contains("dataset"))
        fail(ErrorKind::config, "run spec needs a \"dataset\" path");
    spec.dataset_path = resolve(j["dataset"].get<std::string>());

    if (j.contains("actor")) {
        if (j["actor"].is_string())
            spec.actor = actors::load_actor_config(resolve(j["actor"].get<std::string>()));
        else
            spec.actor = actors::actor_config_from_json(j["actor"]);
    }
    if (j.contains("prompt")) {
        if (j["prompt"].is_string())
            spec.prompt =
                promptkit::load_prompt_config(resolve(j["prompt"].get<std::string>()));
        else
            spec.prompt = promptkit::prompt_config_from_json(j["prompt"]);
    } else {
        spec.prompt = promptkit::PromptConfig::default_config();
    }
    if (j.contains("judge")) {
        if (j["judge"].is_string())
            spec.judge =
                judge::load_judge_config(resolve(j["judge"].get<std::string>()));
        else
            spec.judge = judge::judge_config_from_json(j["judge"]);
    }

    if (j.contains("price_table")) {
        std::ifstream in(resolve(j["price_table"].get<std::string>()));
        if (!in)
            fail(ErrorKind::io, "cannot open price table " +
                                    j["price_table"].get<std::string>());
        json table;
        in >> table;
        if (spec.actor.kind == actors::ActorKind::llm && !spec.actor.price)
            spec.actor.price =
                actors::lookup_price(table, spec.actor.provider, spec.actor.model_id);
        if (spec.judge.judge_actor.kind == actors::ActorKind::llm &&
            !spec.judge.judge_actor.price)
            spec.judge.judge_actor.price =
                actors::lookup_price(table, spec.judge.judge_actor.provider,
                                     spec.judge.judge_actor.model_id);
    }

    spec.seed = j.value("seed", std::uint64_t{0});
    spec.parallelism = j.value("parallelism", 4);
    if (j.contains("sample_n") && !j["sample_n"].is_null())
        spec.sample_n = j["sample_n"].get<std::size_t>();
    spec.failure_abort_fraction = j.value("failure_abort_fraction", 0.20);
    if (j.contains("output_dir"))
        spec.output_dir = resolve(j["output_dir"].get<std::string>());
    return spec;
}

RunSpec load_run_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open run spec: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config,
             "malformed run spec " + path.string() + ": " + e.what());
    }
    return run_spec_from_json(j, path.parent_path());
}

}  // namespace qaeval::runner

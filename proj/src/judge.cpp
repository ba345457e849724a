#include "qaeval/judge.hpp"

#include <cctype>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"
#include "qaeval/hash.hpp"

namespace qaeval::judge {

namespace {

using nlohmann::json;

constexpr std::string_view kOutputInstruction =
    "Write a short justification first, then end with a final line of the "
    "form \"SCORE: <integer 0-5>\".";

}  // namespace

Rubric Rubric::default_rubric() {
    Rubric r;
    r.focus_statement =
        "Score how well the generated answer covers the core teaching points "
        "of the reference answer. Judge the guidance the student receives, "
        "tolerating different wording, structure and level of detail. An "
        "answer that takes a different approach but resolves the same issue "
        "counts as a match. Penalize missing teaching points and penalize "
        "filler that buries them.";
    r.levels = {
        "Complete mismatch: the answer addresses a different issue or gives "
        "guidance that contradicts the reference.",
        "Barely related: the answer touches the topic but misses every core "
        "teaching point or steers the student in an unhelpful direction.",
        "Mostly incomplete: a small part of the core teaching points is "
        "present; the majority is missing or wrong.",
        "Partial match: roughly half of the core teaching points are "
        "covered, or all are present but obscured by substantial "
        "unnecessary material.",
        "Near match: all but a minor teaching point are covered, with at "
        "most small additions beyond the reference.",
        "Complete match: every core teaching point of the reference is "
        "conveyed, directly or through an equivalent alternative approach.",
    };
    return r;
}

void Rubric::validate() const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i].empty())
            fail(ErrorKind::config,
                 "rubric level " + std::to_string(i) + " is empty");
    if (focus_statement.empty())
        fail(ErrorKind::config, "rubric needs a focus statement");
}

void JudgeConfig::validate() const {
    rubric.validate();
    judge_actor.validate();
    if (runs_per_item < 1)
        fail(ErrorKind::config, "runs_per_item must be >= 1");
}

std::string JudgeConfig::fingerprint() const {
    json identity{
        {"actor", judge_actor.fingerprint()},
        {"rubric", rubric_to_json(rubric)},
        {"runs_per_item", runs_per_item},
        {"include_student_question", include_student_question},
        {"include_identified_issue", include_identified_issue},
    };
    return sha256_hex(identity.dump());
}

promptkit::RenderedPrompt build_judge_prompt(
    const std::string& generated, const dataset::GroundTruthAnswer& reference,
    const std::optional<std::string>& question, const JudgeConfig& config) {
    config.rubric.validate();

    std::string rubric_text;
    for (std::size_t score = 0; score < config.rubric.levels.size(); ++score) {
        rubric_text += "Score " + std::to_string(score) + ": " +
                       config.rubric.levels[score];
        if (score + 1 < config.rubric.levels.size()) rubric_text += "\n";
    }

    std::string text = config.rubric.focus_statement;
    text += " ";
    text += kOutputInstruction;
    text += "\n\n";
    text += promptkit::render_section("rubric", rubric_text);
    if (config.include_student_question && question && !question->empty())
        text += promptkit::render_section("student_question", *question);
    if (config.include_identified_issue && !reference.identified_issue.empty())
        text += promptkit::render_section("identified_issue",
                                          reference.identified_issue);
    text += promptkit::render_section("reference_answer",
                                      reference.answer_for_student);
    text += promptkit::render_section(
        "generated_answer", generated.empty() ? "(empty answer)" : generated);

    json canonical{
        {"judge", config.fingerprint()},
        {"item_id", reference.item_id},
        {"generated", generated},
        {"reference", reference.answer_for_student},
        {"identified_issue",
         config.include_identified_issue ? reference.identified_issue : ""},
        {"question",
         config.include_student_question && question ? *question : ""},
    };

    promptkit::RenderedPrompt prompt;
    prompt.text = std::move(text);
    prompt.config_hash = sha256_hex(canonical.dump());
    prompt.item_id = reference.item_id;
    return prompt;
}

JudgeVerdict parse_verdict(const std::string& raw) {
    // Scan lines back to front for the last "SCORE: <n>" line.
    std::size_t line_end = raw.size();
    while (line_end > 0) {
        std::size_t line_start = raw.rfind('\n', line_end - 1);
        const std::size_t begin =
            line_start == std::string::npos ? 0 : line_start + 1;
        std::string_view line(raw.data() + begin, line_end - begin);

        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front())))
            line.remove_prefix(1);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.remove_suffix(1);

        if (line.rfind("SCORE:", 0) == 0) {
            std::string_view value = line.substr(6);
            while (!value.empty() &&
                   std::isspace(static_cast<unsigned char>(value.front())))
                value.remove_prefix(1);
            bool negative = false;
            if (!value.empty() && (value.front() == '-' || value.front() == '+')) {
                negative = value.front() == '-';
                value.remove_prefix(1);
            }
            if (!value.empty() &&
                std::all_of(value.begin(), value.end(), [](unsigned char c) {
                    return std::isdigit(c) != 0;
                })) {
                int score = 0;
                for (char c : value) score = score * 10 + (c - '0');
                if (negative) score = -score;
                if (score < 0 || score > 5)
                    fail(ErrorKind::parse, "judge score " + std::to_string(score) +
                                               " outside 0..5");
                JudgeVerdict verdict;
                verdict.score = score;
                verdict.raw_output = raw;
                verdict.justification = raw.substr(0, begin);
                while (!verdict.justification.empty() &&
                       (verdict.justification.back() == '\n' ||
                        verdict.justification.back() == '\r'))
                    verdict.justification.pop_back();
                return verdict;
            }
        }
        if (line_start == std::string::npos) break;
        line_end = line_start;
    }
    fail(ErrorKind::parse, "judge output has no \"SCORE: <integer 0-5>\" line");
}

ItemJudgement judge_answer(const std::string& generated,
                           const dataset::GroundTruthAnswer& reference,
                           const std::optional<std::string>& question,
                           const JudgeConfig& config,
                           actors::ActorInvoker& invoker) {
    config.validate();
    const promptkit::RenderedPrompt prompt =
        build_judge_prompt(generated, reference, question, config);

    ItemJudgement judgement;
    judgement.item_id = reference.item_id;

    for (int run = 0; run < config.runs_per_item; ++run) {
        std::optional<JudgeVerdict> verdict;
        std::string last_parse_error;
        const int attempts = 1 + config.judge_actor.max_retries;
        for (int attempt = 0; attempt < attempts; ++attempt) {
            // Distinct sub-key per (run, attempt): a cached unparseable
            // output must not satisfy the retry.
            const std::string salt =
                "run=" + std::to_string(run) + ";attempt=" + std::to_string(attempt);
            const actors::ActorOutput out =
                invoker.invoke(config.judge_actor, prompt, salt);
            judgement.judge_cost_cents += out.cost_cents;
            try {
                verdict = parse_verdict(out.answer_text);
                break;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::parse) throw;
                last_parse_error = e.what();
            }
        }
        if (!verdict)
            fail(ErrorKind::parse,
                 "judge failed on item \"" + reference.item_id + "\" run " +
                     std::to_string(run) + " after " + std::to_string(attempts) +
                     " attempt(s): " + last_parse_error);
        judgement.verdicts.push_back(std::move(*verdict));
    }

    judgement.mean_score =
        std::accumulate(judgement.verdicts.begin(), judgement.verdicts.end(), 0.0,
                        [](double acc, const JudgeVerdict& v) {
                            return acc + static_cast<double>(v.score);
                        }) /
        static_cast<double>(judgement.verdicts.size());
    return judgement;
}

Rubric rubric_from_json(const nlohmann::json& j) {
    Rubric rubric;
    if (j.contains("levels")) {
        const auto& levels = j["levels"];
        if (!levels.is_object() || levels.size() != 6)
            fail(ErrorKind::config, "rubric needs exactly six levels keyed 0..5");
        for (int score = 0; score <= 5; ++score) {
            const std::string key = std::to_string(score);
            if (!levels.contains(key))
                fail(ErrorKind::config, "rubric is missing level " + key);
            rubric.levels[static_cast<std::size_t>(score)] =
                levels[key].get<std::string>();
        }
    }
    rubric.focus_statement = j.value("focus_statement", std::string{});
    rubric.validate();
    return rubric;
}

nlohmann::json rubric_to_json(const Rubric& rubric) {
    json levels = json::object();
    for (std::size_t score = 0; score < rubric.levels.size(); ++score)
        levels[std::to_string(score)] = rubric.levels[score];
    return json{{"levels", levels}, {"focus_statement", rubric.focus_statement}};
}

JudgeConfig judge_config_from_json(const nlohmann::json& j) {
    JudgeConfig config;
    if (j.contains("actor"))
        config.judge_actor = actors::actor_config_from_json(j["actor"]);
    if (j.contains("rubric") && !j["rubric"].is_null())
        config.rubric = rubric_from_json(j["rubric"]);
    else
        config.rubric = Rubric::default_rubric();
    config.runs_per_item = j.value("runs_per_item", 3);
    config.include_student_question = j.value("include_student_question", true);
    config.include_identified_issue = j.value("include_identified_issue", false);
    return config;
}

nlohmann::json judge_config_to_json(const JudgeConfig& config) {
    return json{
        {"actor", actors::actor_config_to_json(config.judge_actor)},
        {"rubric", rubric_to_json(config.rubric)},
        {"runs_per_item", config.runs_per_item},
        {"include_student_question", config.include_student_question},
        {"include_identified_issue", config.include_identified_issue},
    };
}

JudgeConfig load_judge_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open judge config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config,
             "malformed judge config " + path.string() + ": " + e.what());
    }
    return judge_config_from_json(j);
}

}  // namespace qaeval::judge

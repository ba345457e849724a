#include "qaeval/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"
#include "qaeval/hash.hpp"

namespace qaeval::dataset {

namespace {

using nlohmann::json;

std::string read_string(const json& record, const char* key,
                        const std::string& where) {
    if (!record.contains(key) || !record[key].is_string())
        fail(ErrorKind::validation,
             where + ": missing or non-string field \"" + key + "\"");
    return record[key].get<std::string>();
}

NaturalLanguage parse_language(const std::string& value,
                               const std::string& where) {
    if (value == "EN") return NaturalLanguage::en;
    if (value == "NL") return NaturalLanguage::nl;
    fail(ErrorKind::validation,
         where + ": natural_language must be \"EN\" or \"NL\", got \"" + value +
             "\"");
}

ExclusionReason parse_reason(const std::string& value,
                             const std::string& where) {
    if (value == "privacy") return ExclusionReason::privacy;
    if (value == "quality") return ExclusionReason::quality;
    fail(ErrorKind::validation,
         where + ": exclusion reason must be \"privacy\" or \"quality\", got \"" +
             value + "\"");
}

ScenarioTag parse_scenario(const std::string& value, const std::string& where) {
    if (value == "verbose") return ScenarioTag::verbose;
    if (value == "concise") return ScenarioTag::concise;
    if (value == "other") return ScenarioTag::other;
    fail(ErrorKind::validation,
         where + ": scenario_tag must be verbose/concise/other, got \"" + value +
             "\"");
}

GroundTruthAnswer parse_ground_truth(const json& record,
                                     const std::string& where) {
    GroundTruthAnswer gt;
    gt.item_id = read_string(record, "item_id", where);
    gt.identified_issue = read_string(record, "identified_issue", where);
    gt.answer_for_student = read_string(record, "answer_for_student", where);
    if (gt.identified_issue.empty() || gt.answer_for_student.empty())
        fail(ErrorKind::validation, where + ": ground truth for \"" +
                                        gt.item_id +
                                        "\" has an empty text field");
    return gt;
}

RecordedHumanAnswer parse_recorded(const json& record,
                                   const std::string& where) {
    RecordedHumanAnswer answer;
    answer.item_id = read_string(record, "item_id", where);
    answer.answer_text = read_string(record, "answer_text", where);
    return answer;
}

QuestionItem parse_item(const json& record, const std::string& where) {
    QuestionItem item;
    item.id = read_string(record, "id", where);
    if (item.id.empty()) fail(ErrorKind::validation, where + ": empty item id");
    item.question_text = read_string(record, "question_text", where);
    if (record.contains("question_line") && !record["question_line"].is_null()) {
        if (!record["question_line"].is_number_integer())
            fail(ErrorKind::validation,
                 where + ": question_line must be an integer");
        const int line = record["question_line"].get<int>();
        if (line < 1)
            fail(ErrorKind::validation,
                 "item \"" + item.id + "\": question_line must be >= 1, got " +
                     std::to_string(line));
        item.question_line = line;
    }
    item.submitted_code = read_string(record, "submitted_code", where);
    item.programming_language = read_string(record, "programming_language", where);
    item.natural_language =
        parse_language(read_string(record, "natural_language", where),
                       "item \"" + item.id + "\"");
    item.assignment_description =
        record.value("assignment_description", std::string{});
    if (record.contains("failing_tests")) {
        for (const auto& t : record["failing_tests"]) {
            NormalizedTestFailure f;
            f.test_name = read_string(t, "test_name", where);
            if (f.test_name.empty())
                fail(ErrorKind::validation,
                     "item \"" + item.id + "\": failing test with empty test_name");
            f.expected = t.value("expected", std::string{});
            f.actual = t.value("actual", std::string{});
            if (t.contains("message") && !t["message"].is_null())
                f.message = t["message"].get<std::string>();
            item.failing_tests.push_back(std::move(f));
        }
    }
    if (record.contains("lint_messages"))
        item.lint_messages =
            record["lint_messages"].get<std::vector<std::string>>();
    if (record.contains("excluded") && !record["excluded"].is_null()) {
        const auto& ex = record["excluded"];
        item.excluded = parse_reason(read_string(ex, "reason", where),
                                     "item \"" + item.id + "\"");
    }
    return item;
}

}  // namespace

std::string to_string(NaturalLanguage lang) {
    return lang == NaturalLanguage::en ? "EN" : "NL";
}

std::string to_string(ExclusionReason reason) {
    return reason == ExclusionReason::privacy ? "privacy" : "quality";
}

std::string to_string(ScenarioTag tag) {
    switch (tag) {
        case ScenarioTag::verbose: return "verbose";
        case ScenarioTag::concise: return "concise";
        default: return "other";
    }
}

const QuestionItem* EvalDataset::find_item(const std::string& id) const {
    for (const auto& item : items)
        if (item.id == id) return &item;
    return nullptr;
}

std::size_t EvalDataset::active_count() const {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(),
                      [](const QuestionItem& i) { return !i.excluded; }));
}

std::string EvalDataset::digest() const { return sha256_hex(to_jsonl(*this)); }

nlohmann::json to_json(const QuestionItem& item) {
    json j{
        {"kind", "item"},
        {"id", item.id},
        {"question_text", item.question_text},
        {"submitted_code", item.submitted_code},
        {"programming_language", item.programming_language},
        {"natural_language", to_string(item.natural_language)},
        {"assignment_description", item.assignment_description},
    };
    if (item.question_line) j["question_line"] = *item.question_line;
    if (!item.failing_tests.empty()) {
        json tests = json::array();
        for (const auto& t : item.failing_tests) {
            json tj{{"test_name", t.test_name},
                    {"expected", t.expected},
                    {"actual", t.actual}};
            if (t.message) tj["message"] = *t.message;
            tests.push_back(std::move(tj));
        }
        j["failing_tests"] = std::move(tests);
    }
    if (!item.lint_messages.empty()) j["lint_messages"] = item.lint_messages;
    if (item.excluded)
        j["excluded"] = json{{"reason", to_string(*item.excluded)}};
    return j;
}

nlohmann::json to_json(const GroundTruthAnswer& gt) {
    return json{{"kind", "ground_truth"},
                {"item_id", gt.item_id},
                {"identified_issue", gt.identified_issue},
                {"answer_for_student", gt.answer_for_student}};
}

nlohmann::json to_json(const RecordedHumanAnswer& answer) {
    return json{{"kind", "recorded_answer"},
                {"item_id", answer.item_id},
                {"answer_text", answer.answer_text}};
}

nlohmann::json to_json(const CalibrationRecord& record) {
    json j{{"id", record.id},
           {"generated_answer", record.generated_answer},
           {"reference_answer", record.reference_answer},
           {"scenario_tag", to_string(record.scenario_tag)}};
    if (record.sme_score) j["sme_score"] = *record.sme_score;
    return j;
}

std::vector<std::string> dataset_violations(const EvalDataset& dataset) {
    std::vector<std::string> violations;
    std::set<std::string> ids;
    for (const auto& item : dataset.items) {
        if (item.id.empty()) violations.push_back("item with empty id");
        if (!ids.insert(item.id).second)
            violations.push_back("duplicate item id \"" + item.id + "\"");
        if (item.question_line && *item.question_line < 1)
            violations.push_back("item \"" + item.id +
                                 "\": question_line must be >= 1");
        for (const auto& t : item.failing_tests)
            if (t.test_name.empty())
                violations.push_back("item \"" + item.id +
                                     "\": failing test with empty test_name");
    }
    for (const auto& [id, gt] : dataset.ground_truths) {
        if (ids.find(id) == ids.end())
            violations.push_back("ground truth references unknown item \"" + id +
                                 "\"");
        if (gt.identified_issue.empty())
            violations.push_back("ground truth for \"" + id +
                                 "\": empty identified_issue");
        if (gt.answer_for_student.empty())
            violations.push_back("ground truth for \"" + id +
                                 "\": empty answer_for_student");
    }
    for (const auto& item : dataset.items) {
        if (!item.excluded &&
            dataset.ground_truths.find(item.id) == dataset.ground_truths.end())
            violations.push_back("item \"" + item.id + "\" has no ground truth");
    }
    for (const auto& [id, answer] : dataset.recorded_answers) {
        if (ids.find(id) == ids.end())
            violations.push_back("recorded answer references unknown item \"" +
                                 id + "\"");
        if (answer.answer_text.empty())
            violations.push_back("recorded answer for \"" + id +
                                 "\": empty answer_text");
    }
    return violations;
}

void validate_dataset(const EvalDataset& dataset) {
    const auto violations = dataset_violations(dataset);
    if (!violations.empty()) fail(ErrorKind::validation, violations.front());
}

EvalDataset load_dataset(const std::filesystem::path& path,
                         DatasetFormat format) {
    (void)format;  // jsonl is the only format
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open dataset file: " + path.string());

    EvalDataset dataset;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::validation,
                 where + ": malformed JSON record: " + e.what());
        }
        const std::string kind = read_string(record, "kind", where);
        if (kind == "item") {
            QuestionItem item = parse_item(record, where);
            if (dataset.find_item(item.id) != nullptr)
                fail(ErrorKind::validation,
                     where + ": duplicate item id \"" + item.id + "\"");
            dataset.items.push_back(std::move(item));
        } else if (kind == "ground_truth") {
            GroundTruthAnswer gt = parse_ground_truth(record, where);
            if (dataset.ground_truths.count(gt.item_id))
                fail(ErrorKind::validation,
                     where + ": second ground truth for item \"" + gt.item_id +
                         "\"");
            dataset.ground_truths.emplace(gt.item_id, std::move(gt));
        } else if (kind == "recorded_answer") {
            RecordedHumanAnswer answer = parse_recorded(record, where);
            if (dataset.recorded_answers.count(answer.item_id))
                fail(ErrorKind::validation,
                     where + ": second recorded answer for item \"" +
                         answer.item_id + "\"");
            dataset.recorded_answers.emplace(answer.item_id, std::move(answer));
        } else {
            fail(ErrorKind::validation,
                 where + ": unknown record kind \"" + kind + "\"");
        }
    }

    validate_dataset(dataset);
    return dataset;
}

std::string to_jsonl(const EvalDataset& dataset) {
    std::ostringstream out;
    for (const auto& item : dataset.items) out << to_json(item).dump() << "\n";
    for (const auto& [id, gt] : dataset.ground_truths)
        out << to_json(gt).dump() << "\n";
    for (const auto& [id, answer] : dataset.recorded_answers)
        out << to_json(answer).dump() << "\n";
    return out.str();
}

void save_dataset(const EvalDataset& dataset,
                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write dataset file: " + path.string());
    out << to_jsonl(dataset);
}

FilterResult filter_active(const EvalDataset& dataset) {
    FilterResult result;
    for (const auto& item : dataset.items) {
        if (!item.excluded) {
            result.active.items.push_back(item);
            auto gt = dataset.ground_truths.find(item.id);
            if (gt != dataset.ground_truths.end())
                result.active.ground_truths.emplace(item.id, gt->second);
            auto rec = dataset.recorded_answers.find(item.id);
            if (rec != dataset.recorded_answers.end())
                result.active.recorded_answers.emplace(item.id, rec->second);
        } else if (*item.excluded == ExclusionReason::privacy) {
            ++result.removed_privacy;
        } else {
            ++result.removed_quality;
        }
    }
    if (result.active.items.empty() && !dataset.items.empty())
        result.warnings.push_back("all items are excluded; nothing left");
    return result;
}

namespace {

// Unbiased [0, bound) draw; mt19937_64's sequence is fixed by the standard
// so this stays identical across platforms.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

EvalDataset sample(const EvalDataset& dataset, std::size_t n,
                   std::uint64_t seed) {
    if (n > dataset.items.size())
        fail(ErrorKind::validation,
             "sample size " + std::to_string(n) + " exceeds dataset size " +
                 std::to_string(dataset.items.size()));

    std::vector<std::size_t> indices(dataset.items.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t j =
            i + bounded_draw(rng, static_cast<std::uint64_t>(indices.size() - i));
        std::swap(indices[i], indices[static_cast<std::size_t>(j)]);
    }
    indices.resize(n);
    std::sort(indices.begin(), indices.end());  // keep original order

    EvalDataset out;
    for (std::size_t idx : indices) {
        const auto& item = dataset.items[idx];
        out.items.push_back(item);
        auto gt = dataset.ground_truths.find(item.id);
        if (gt != dataset.ground_truths.end())
            out.ground_truths.emplace(item.id, gt->second);
        auto rec = dataset.recorded_answers.find(item.id);
        if (rec != dataset.recorded_answers.end())
            out.recorded_answers.emplace(item.id, rec->second);
    }
    return out;
}

CalibrationLoad load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open calibration file: " + path.string());

    CalibrationLoad load;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::validation,
                 where + ": malformed JSON record: " + e.what());
        }
        CalibrationRecord r;
        r.id = read_string(record, "id", where);
        if (r.id.empty()) fail(ErrorKind::validation, where + ": empty record id");
        if (!ids.insert(r.id).second)
            fail(ErrorKind::validation,
                 where + ": duplicate calibration record id \"" + r.id + "\"");
        r.generated_answer = read_string(record, "generated_answer", where);
        r.reference_answer = read_string(record, "reference_answer", where);
        if (record.contains("sme_score") && !record["sme_score"].is_null()) {
            if (!record["sme_score"].is_number_integer())
                fail(ErrorKind::validation,
                     "record \"" + r.id + "\": sme_score must be an integer");
            const int score = record["sme_score"].get<int>();
            if (score < 0 || score > 5)
                fail(ErrorKind::validation,
                     "record \"" + r.id + "\": sme_score " +
                         std::to_string(score) + " outside 0..5");
            r.sme_score = score;
        }
        if (record.contains("scenario_tag"))
            r.scenario_tag = parse_scenario(
                record["scenario_tag"].get<std::string>(), "record \"" + r.id + "\"");
        switch (r.scenario_tag) {
            case ScenarioTag::verbose: ++load.verbose_count; break;
            case ScenarioTag::concise: ++load.concise_count; break;
            default: ++load.other_count; break;
        }
        load.records.push_back(std::move(r));
    }
    if (load.records.empty())
        load.warnings.push_back("calibration file contains no records");
    return load;
}

FileValidation validate_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::io, "cannot open dataset file: " + path.string());

    FileValidation result;
    EvalDataset dataset;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        try {
            json record = json::parse(line);
            const std::string kind = read_string(record, "kind", where);
            if (kind == "item") {
                QuestionItem item = parse_item(record, where);
                ++result.item_count;
                dataset.items.push_back(std::move(item));
            } else if (kind == "ground_truth") {
                GroundTruthAnswer gt = parse_ground_truth(record, where);
                ++result.ground_truth_count;
                if (!dataset.ground_truths.emplace(gt.item_id, gt).second)
                    result.violations.push_back(
                        where + ": second ground truth for item \"" +
                        gt.item_id + "\"");
            } else if (kind == "recorded_answer") {
                RecordedHumanAnswer answer = parse_recorded(record, where);
                ++result.recorded_count;
                if (!dataset.recorded_answers.emplace(answer.item_id, answer)
                         .second)
                    result.violations.push_back(
                        where + ": second recorded answer for item \"" +
                        answer.item_id + "\"");
            } else {
                result.violations.push_back(where + ": unknown record kind \"" +
                                            kind + "\"");
            }
        } catch (const json::parse_error& e) {
            result.violations.push_back(where + ": malformed JSON record: " +
                                        e.what());
        } catch (const Error& e) {
            result.violations.push_back(e.what());
        }
    }
    const auto semantic = dataset_violations(dataset);
    result.violations.insert(result.violations.end(), semantic.begin(),
                             semantic.end());
    return result;
}

void save_calibration(const std::vector<CalibrationRecord>& records,
                      const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            fail(ErrorKind::io, "cannot write calibration file: " + path.string());
        for (const auto& record : records) out << to_json(record).dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace qaeval::dataset

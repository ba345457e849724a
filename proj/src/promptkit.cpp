#include "qaeval/promptkit.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"
#include "qaeval/hash.hpp"

namespace qaeval::promptkit {

namespace {

using nlohmann::json;

constexpr std::string_view kDefaultInstruction =
    "You are a teaching assistant for an introductory programming course. "
    "Use the provided context to identify the issue behind the student's "
    "question and answer with a focused hint that guides the student toward "
    "the solution while leaving the implementation work to them. Ground "
    "every statement in the student's code and the assignment, and answer "
    "in the student's preferred natural language.";

constexpr std::string_view kCotSentence =
    "Reason through the problem step by step internally before writing, "
    "then give only the final answer.";

constexpr std::string_view kDefaultOneShotExample =
    "question: Why does my conversion return the wrong value?\n"
    "code:\n"
    "import math\n"
    "def to_degrees(angle):\n"
    "    return math.sin(angle) * 180\n"
    "answer: The formula mixes up a trigonometric function with a unit "
    "conversion. Look up what math offers for converting between radians "
    "and degrees, and compare it with what your formula computes for a "
    "small angle such as 0.";

std::string stringify_leaf(const json& node) {
    if (node.is_string()) return node.get<std::string>();
    if (node.is_null()) return "";
    return node.dump();
}

void eval_path(const json& node, const std::vector<std::string>& segments,
               std::size_t idx, std::vector<const json*>& out) {
    if (idx == segments.size()) {
        out.push_back(&node);
        return;
    }
    const std::string& seg = segments[idx];
    if (seg == "*") {
        if (node.is_array())
            for (const auto& child : node) eval_path(child, segments, idx + 1, out);
        return;
    }
    if (node.is_object()) {
        auto it = node.find(seg);
        if (it != node.end()) eval_path(*it, segments, idx + 1, out);
    }
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> segments;
    std::stringstream ss(path);
    std::string seg;
    while (std::getline(ss, seg, '.'))
        if (!seg.empty()) segments.push_back(seg);
    return segments;
}

std::vector<const json*> select(const json& root, const std::string& path) {
    std::vector<const json*> out;
    if (path.empty()) return out;
    eval_path(root, split_path(path), 0, out);
    return out;
}

std::string select_text(const json& node, const std::string& path) {
    const auto matches = select(node, path);
    if (matches.empty()) return "";
    return stringify_leaf(*matches.front());
}

std::string format_failing_tests(
    const std::vector<dataset::NormalizedTestFailure>& tests) {
    std::ostringstream out;
    for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto& t = tests[i];
        if (i > 0) out << "\n";
        out << "test: " << t.test_name << "\n";
        out << "expected: " << t.expected << "\n";
        out << "actual: " << t.actual;
        if (t.message) out << "\n" << "message: " << *t.message;
    }
    return out.str();
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::ostringstream out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out << "\n";
        out << lines[i];
    }
    return out.str();
}

// Content an item provides for a field; empty means the section is omitted.
std::string field_content(const dataset::QuestionItem& item,
                          PromptField field) {
    switch (field) {
        case PromptField::question: return item.question_text;
        case PromptField::code: return item.submitted_code;
        case PromptField::line_number:
            return item.question_line ? std::to_string(*item.question_line) : "";
        case PromptField::assignment: return item.assignment_description;
        case PromptField::failing_tests:
            return format_failing_tests(item.failing_tests);
        case PromptField::lint_messages: return join_lines(item.lint_messages);
        case PromptField::programming_language:
            return item.programming_language;
        case PromptField::natural_language:
            return dataset::to_string(item.natural_language);
    }
    return "";
}

}  // namespace

std::string_view field_tag(PromptField field) {
    switch (field) {
        case PromptField::question: return "question";
        case PromptField::code: return "code";
        case PromptField::line_number: return "line_number";
        case PromptField::assignment: return "assignment";
        case PromptField::failing_tests: return "failing_tests";
        case PromptField::lint_messages: return "lint_messages";
        case PromptField::programming_language: return "programming_language";
        case PromptField::natural_language: return "natural_language";
    }
    return "";
}

std::optional<PromptField> field_from_tag(std::string_view tag) {
    for (PromptField f : kAllPromptFields)
        if (field_tag(f) == tag) return f;
    return std::nullopt;
}

std::string_view to_string(Technique technique) {
    switch (technique) {
        case Technique::zero_shot: return "zero_shot";
        case Technique::zero_shot_cot: return "zero_shot_cot";
        case Technique::one_shot: return "one_shot";
    }
    return "";
}

PromptConfig PromptConfig::default_config() {
    PromptConfig config;
    // Everything except the line number, which measurably adds nothing.
    config.included_fields = {
        PromptField::question,          PromptField::code,
        PromptField::assignment,        PromptField::failing_tests,
        PromptField::lint_messages,     PromptField::programming_language,
        PromptField::natural_language,
    };
    config.technique = Technique::zero_shot_cot;
    config.instruction_text = std::string(kDefaultInstruction);
    return config;
}

void PromptConfig::validate() const {
    std::vector<PromptField> seen;
    for (PromptField f : included_fields) {
        if (std::find(seen.begin(), seen.end(), f) != seen.end())
            fail(ErrorKind::config,
                 "prompt config lists field \"" + std::string(field_tag(f)) +
                     "\" twice");
        seen.push_back(f);
    }
    const bool has_question =
        std::find(seen.begin(), seen.end(), PromptField::question) != seen.end();
    const bool has_code =
        std::find(seen.begin(), seen.end(), PromptField::code) != seen.end();
    if (!has_question || !has_code)
        fail(ErrorKind::config,
             "prompt config must include question and code");
    if (word_limit && *word_limit < 1)
        fail(ErrorKind::config, "word_limit must be >= 1");
}

std::string render_section(std::string_view tag, std::string_view content) {
    std::string out;
    out.reserve(tag.size() * 2 + content.size() + 8);
    out.append("<").append(tag).append(">\n");
    out.append(content);
    out.append("\n</").append(tag).append(">\n");
    return out;
}

std::vector<Section> extract_sections(std::string_view text) {
    std::vector<Section> sections;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (line.size() > 2 && line.front() == '<' && line.back() == '>' &&
            line[1] != '/') {
            const std::string tag(line.substr(1, line.size() - 2));
            const std::string closing = "\n</" + tag + ">";
            const std::size_t body_start = eol + 1;
            const std::size_t close_pos = text.find(closing, eol);
            if (close_pos != std::string_view::npos && body_start <= close_pos) {
                sections.push_back(Section{
                    tag, std::string(text.substr(body_start,
                                                 close_pos - body_start))});
                pos = close_pos + closing.size();
                continue;
            }
        }
        pos = eol + 1;
    }
    return sections;
}

RenderedPrompt build_prompt(const dataset::QuestionItem& item,
                            const PromptConfig& config) {
    config.validate();

    std::string instruction = config.instruction_text;
    if (config.word_limit) {
        instruction += " Keep the answer within " +
                       std::to_string(*config.word_limit) +
                       " words unless more detail is essential.";
    }
    if (config.technique == Technique::zero_shot_cot) {
        instruction += " ";
        instruction += kCotSentence;
    }

    std::string text = instruction;
    text += "\n\n";

    if (config.technique == Technique::one_shot) {
        const std::string& example = config.one_shot_example.empty()
                                         ? std::string(kDefaultOneShotExample)
                                         : config.one_shot_example;
        text += render_section("example", example);
    }

    json hashed_sections = json::array();
    for (PromptField field : config.included_fields) {
        const std::string content = field_content(item, field);
        if (content.empty()) continue;  // empty optional fields are omitted
        text += render_section(field_tag(field), content);
        hashed_sections.push_back({std::string(field_tag(field)), content});
    }

    const json canonical{
        {"config", prompt_config_to_json(config)},
        {"item_id", item.id},
        {"sections", hashed_sections},
    };

    RenderedPrompt prompt;
    prompt.text = std::move(text);
    prompt.config_hash = sha256_hex(canonical.dump());
    prompt.item_id = item.id;
    return prompt;
}

std::vector<AblationVariant> ablation_configs(const PromptConfig& base) {
    base.validate();
    std::vector<AblationVariant> variants;
    variants.push_back({"baseline", base});

    for (PromptField field : base.included_fields) {
        if (field == PromptField::question || field == PromptField::code)
            continue;
        PromptConfig variant = base;
        variant.included_fields.erase(
            std::remove(variant.included_fields.begin(),
                        variant.included_fields.end(), field),
            variant.included_fields.end());
        variants.push_back(
            {"-" + std::string(field_tag(field)), std::move(variant)});
    }

    for (PromptField field : kAllPromptFields) {
        if (std::find(base.included_fields.begin(), base.included_fields.end(),
                      field) != base.included_fields.end())
            continue;
        PromptConfig variant = base;
        variant.included_fields.push_back(field);
        variants.push_back(
            {"+" + std::string(field_tag(field)), std::move(variant)});
    }
    return variants;
}

TestResultPaths TestResultPaths::dodona_default() {
    // Best-effort stand-in for the LMS's unconstrained result schema.
    TestResultPaths paths;
    paths.tests = "groups.*.tests.*";
    paths.name = "name";
    paths.expected = "expected";
    paths.actual = "generated";
    paths.message = "description";
    paths.status = "accepted";
    paths.failing_value = "false";
    return paths;
}

NormalizeResult normalize_test_results(const json& raw,
                                       const TestResultPaths& paths) {
    NormalizeResult result;
    const auto nodes = select(raw, paths.tests);
    if (nodes.empty()) {
        result.warnings.push_back("test path \"" + paths.tests +
                                  "\" matched nothing");
        return result;
    }
    for (const json* node : nodes) {
        if (!paths.status.empty()) {
            const auto status_nodes = select(*node, paths.status);
            if (status_nodes.empty()) continue;
            if (stringify_leaf(*status_nodes.front()) != paths.failing_value)
                continue;
        }
        dataset::NormalizedTestFailure f;
        f.test_name = select_text(*node, paths.name);
        f.expected = select_text(*node, paths.expected);
        f.actual = select_text(*node, paths.actual);
        const std::string message = select_text(*node, paths.message);
        if (!message.empty()) f.message = message;
        result.failures.push_back(std::move(f));
    }
    return result;
}

PromptConfig prompt_config_from_json(const json& j) {
    PromptConfig config;
    config.included_fields.clear();
    if (j.contains("included_fields")) {
        for (const auto& tag : j["included_fields"]) {
            const auto field = field_from_tag(tag.get<std::string>());
            if (!field)
                fail(ErrorKind::config,
                     "unknown prompt field \"" + tag.get<std::string>() + "\"");
            config.included_fields.push_back(*field);
        }
    }
    if (j.contains("technique")) {
        const std::string t = j["technique"].get<std::string>();
        if (t == "zero_shot") config.technique = Technique::zero_shot;
        else if (t == "zero_shot_cot") config.technique = Technique::zero_shot_cot;
        else if (t == "one_shot") config.technique = Technique::one_shot;
        else fail(ErrorKind::config, "unknown technique \"" + t + "\"");
    }
    config.instruction_text =
        j.value("instruction_text", std::string(kDefaultInstruction));
    if (j.contains("word_limit") && !j["word_limit"].is_null())
        config.word_limit = j["word_limit"].get<int>();
    config.one_shot_example = j.value("one_shot_example", std::string{});
    config.validate();
    return config;
}

nlohmann::json prompt_config_to_json(const PromptConfig& config) {
    json fields = json::array();
    for (PromptField f : config.included_fields)
        fields.push_back(std::string(field_tag(f)));
    json j{
        {"included_fields", fields},
        {"technique", std::string(to_string(config.technique))},
        {"instruction_text", config.instruction_text},
    };
    if (config.word_limit) j["word_limit"] = *config.word_limit;
    if (!config.one_shot_example.empty())
        j["one_shot_example"] = config.one_shot_example;
    return j;
}

PromptConfig load_prompt_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open prompt config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config,
             "malformed prompt config " + path.string() + ": " + e.what());
    }
    return prompt_config_from_json(j);
}

}  // namespace qaeval::promptkit

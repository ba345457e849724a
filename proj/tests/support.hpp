// Shared test helpers: mock transport, fixture builders, temp dirs.
#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qaeval/actors.hpp"
#include "qaeval/dataset.hpp"
#include "qaeval/judge.hpp"
#include "qaeval/promptkit.hpp"

#ifndef QAEVAL_FIXTURES_DIR
#error "QAEVAL_FIXTURES_DIR must be defined by the build"
#endif

namespace support {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(QAEVAL_FIXTURES_DIR) / name;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("qaeval_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Transport double: counts requests, records them, and answers via a
// configurable handler. Optionally sleeps to widen concurrency windows.
class MockTransport : public qaeval::actors::Transport {
public:
    using Handler =
        std::function<qaeval::actors::HttpResponse(const qaeval::actors::HttpRequest&)>;

    explicit MockTransport(Handler handler) : handler_(std::move(handler)) {}

    qaeval::actors::HttpResponse post(
        const qaeval::actors::HttpRequest& request) override {
        const int now = ++in_flight_;
        int expected = max_in_flight_.load();
        while (now > expected &&
               !max_in_flight_.compare_exchange_weak(expected, now)) {
        }
        ++calls_;
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(request);
        }
        if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
        auto response = handler_(request);
        --in_flight_;
        return response;
    }

    int calls() const { return calls_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }
    void set_delay(std::chrono::milliseconds delay) { delay_ = delay; }
    std::vector<qaeval::actors::HttpRequest> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    Handler handler_;
    std::atomic<int> calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::chrono::milliseconds delay_{0};
    mutable std::mutex mutex_;
    std::vector<qaeval::actors::HttpRequest> requests_;
};

// Canned openai-shaped success body.
inline std::string openai_body(const std::string& answer, int in_tok = 100,
                               int out_tok = 25) {
    return std::string("{\"choices\":[{\"message\":{\"content\":\"") + answer +
           "\"}}],\"usage\":{\"prompt_tokens\":" + std::to_string(in_tok) +
           ",\"completion_tokens\":" + std::to_string(out_tok) + "}}";
}

inline qaeval::dataset::QuestionItem make_item(const std::string& id) {
    qaeval::dataset::QuestionItem item;
    item.id = id;
    item.question_text = "Question for " + id + "?";
    item.submitted_code = "print('" + id + "')\n";
    item.programming_language = "python";
    item.natural_language = qaeval::dataset::NaturalLanguage::en;
    item.assignment_description = "# Assignment " + id;
    return item;
}

inline qaeval::dataset::GroundTruthAnswer make_gt(const std::string& id) {
    qaeval::dataset::GroundTruthAnswer gt;
    gt.item_id = id;
    gt.identified_issue = "Issue in " + id;
    gt.answer_for_student = "Reference guidance for " + id + ".";
    return gt;
}

// Dataset shaped like the paper's: n items, the first n_recorded carry an
// educator answer, plus `n_excluded` flagged items on top.
inline qaeval::dataset::EvalDataset make_shaped_dataset(std::size_t n_items,
                                                        std::size_t n_recorded,
                                                        std::size_t n_excluded = 0) {
    qaeval::dataset::EvalDataset data;
    for (std::size_t i = 0; i < n_items + n_excluded; ++i) {
        const std::string id = "item" + std::to_string(i);
        auto item = make_item(id);
        if (i >= n_items)
            item.excluded = (i % 2 == 0)
                                ? qaeval::dataset::ExclusionReason::privacy
                                : qaeval::dataset::ExclusionReason::quality;
        data.items.push_back(std::move(item));
        if (i < n_items) data.ground_truths.emplace(id, make_gt(id));
        if (i < n_recorded) {
            qaeval::dataset::RecordedHumanAnswer rec;
            rec.item_id = id;
            rec.answer_text = "Educator answer for " + id + ".";
            data.recorded_answers.emplace(id, rec);
        }
    }
    return data;
}

inline qaeval::actors::ActorConfig scripted_actor(
    std::map<std::string, std::string> script,
    std::optional<std::string> fallback = std::nullopt) {
    qaeval::actors::ActorConfig actor;
    actor.name = "scripted";
    actor.kind = qaeval::actors::ActorKind::scripted;
    actor.script = std::move(script);
    actor.script_default = std::move(fallback);
    return actor;
}

// Judge whose scripted actor answers "SCORE: <n>" per item id.
inline qaeval::judge::JudgeConfig scripted_judge(
    const std::map<std::string, int>& scores, int runs_per_item = 3) {
    std::map<std::string, std::string> script;
    for (const auto& [id, score] : scores)
        script[id] = "Scripted verdict.\nSCORE: " + std::to_string(score);
    qaeval::judge::JudgeConfig config;
    config.judge_actor = scripted_actor(std::move(script));
    config.judge_actor.name = "scripted-judge";
    config.rubric = qaeval::judge::Rubric::default_rubric();
    config.runs_per_item = runs_per_item;
    return config;
}

inline std::vector<int> random_scores(std::mt19937_64& rng, std::size_t n,
                                      int k = 6) {
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(rng() % static_cast<unsigned>(k));
    return v;
}

inline bool is_constant(const std::vector<int>& v) {
    for (int x : v)
        if (x != v.front()) return false;
    return true;
}

}  // namespace support

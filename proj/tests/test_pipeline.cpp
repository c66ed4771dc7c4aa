#include <doctest.h>

#include <atomic>
#include <filesystem>

#include "planex/error.hpp"
#include "planex/pipeline.hpp"
#include "support.hpp"

using namespace planex;
using namespace planex::pipeline;
namespace fs = std::filesystem;

namespace {

void run_to(const RunDir& run, Stage last, refine::RefinerBackend& backend) {
    ingest(run, experiences::generate_synthetic(42, 18, {}), "seed-42");
    if (last == Stage::ingested) return;
    classify(run, 0.68);
    if (last == Stage::classified) return;
    infer(run);
    if (last == Stage::inferred) return;
    narrate(run, {});
    if (last == Stage::narrated) return;
    explain(run, backend, {});
    if (last == Stage::refined) return;
    evaluate(run, {0.85});
}

// Fails every call after the first `budget`.
class BudgetBackend final : public refine::RefinerBackend {
public:
    explicit BudgetBackend(int budget) : budget_(budget) {}
    std::string complete(const std::vector<refine::ChatMessage>& m) override {
        if (budget_.fetch_sub(1) <= 0) throw BackendError("budget exhausted");
        ++calls_;
        return inner_.complete(m);
    }
    std::string name() const override { return "deterministic"; }
    int calls() const { return calls_; }

private:
    std::atomic<int> budget_;
    std::atomic<int> calls_{0};
    refine::DeterministicBackend inner_;
};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("stage names and artifacts") {
    for (auto s : kStages) CHECK(parse_stage(to_string(s)) == s);
    CHECK_THROWS_AS(parse_stage("polished"), InvalidArgument);
    CHECK(stage_artifacts(Stage::refined) ==
          std::vector<std::string>{"explanations.jsonl", "explanations.txt", "interactions.jsonl"});
}

TEST_CASE("full run writes every artifact") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    refine::DeterministicBackend backend;
    run_to(run, Stage::evaluated, backend);
    const auto state = run.state();
    CHECK(state.corpus_id == "seed-42");
    REQUIRE(state.completed.size() == 6);
    for (const auto& rec : state.completed) {
        for (const auto& a : rec.artifacts) CHECK_MESSAGE(fs::exists(run.file(a)), a);
    }
    CHECK(state.completed[1].params["alpha"] == 0.68);
    CHECK(state.completed[3].params["levels"] == nlohmann::json{1, 2, 3});
    CHECK(run.properties().size() == 18);
    CHECK(run.hdi().size() == 3);
    CHECK(run.inference()["pairs_compared"] == 153);
    CHECK(run.narratives().size() == 3 * 153);
    CHECK(run.explanations().size() == 3 * 153);
    CHECK(run.interactions().size() == 3 * 153);
    for (const auto& r : run.interactions()) CHECK(r.revisions.size() == 2);
    CHECK_FALSE(fs::exists(run.file("explanations.partial.jsonl")));

    const auto report = run.report();
    CHECK(report["narratives"] == 3 * 153);
    CHECK(report["mu0"] == 0.85);
    CHECK(report["pairs"].size() == 3 * 153);
    CHECK(report["tables"]["interaction"].is_object());
    for (const auto& t : report["tables"]["refinement"]["tests"]) {
        if (t["metric"] == "cosine") {
            CHECK(t["test"] == "one-sample");
        } else {
            CHECK(t["test"] == "paired");
            CHECK(t["df"] == 152);
        }
    }
    const auto text = read_file(run.file("report.txt"));
    CHECK(text.find("Baseline narrative vs refined explanation") != std::string::npos);
    CHECK(text.find("Refined explanation vs follow-up revision") != std::string::npos);
}

TEST_CASE("stages out of order are refused") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    refine::DeterministicBackend backend;
    CHECK_THROWS_AS(run.state(), DataError);
    ingest(run, experiences::generate_synthetic(1, 4, {}), "c");
    CHECK_THROWS_AS(infer(run), StageError);
    CHECK_THROWS_AS(narrate(run, {}), StageError);
    CHECK_THROWS_AS(explain(run, backend, {}), StageError);
    CHECK_THROWS_AS(evaluate(run, {0.8}), StageError);
    classify(run, 0.5);
    CHECK_THROWS_AS(classify(run, 0.5, Rerun::forbid), StageError);
    CHECK_THROWS_AS(classify(run, 1.0), InvalidArgument);
    CHECK_THROWS_AS(narrate(run, NarrateParams{{}, 0}), InvalidArgument);
    CHECK_THROWS_AS(ingest(run, experiences::generate_synthetic(1, 1, {}), "c"), InvalidArgument);
}

TEST_CASE("rerunning a stage drops everything downstream") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    refine::DeterministicBackend backend;
    run_to(run, Stage::refined, backend);
    classify(run, 0.5);
    const auto state = run.state();
    CHECK(state.stage() == Stage::classified);
    CHECK(state.completed.size() == 2);
    CHECK_FALSE(fs::exists(run.file("inference.json")));
    CHECK_FALSE(fs::exists(run.file("narratives.jsonl")));
    CHECK_FALSE(fs::exists(run.file("explanations.jsonl")));
    CHECK(run.hdi().begin()->second.alpha == doctest::Approx(0.5));
    CHECK(state.completed[1].params["alpha"] == 0.5);
}

TEST_CASE("evaluate needs mu0") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    refine::DeterministicBackend backend;
    run_to(run, Stage::refined, backend);
    CHECK_THROWS_AS(evaluate(run, {}), InvalidArgument);
    CHECK(run.state().stage() == Stage::refined);
}

TEST_CASE("a single level and no follow-up") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    ingest(run, experiences::generate_synthetic(5, 6, {}), "c");
    classify(run, 0.68);
    infer(run);
    narrate(run, NarrateParams{{2}, 1});
    CHECK(run.narratives().size() == 15);
    refine::DeterministicBackend backend;
    ExplainParams ep;
    ep.follow_up.clear();
    explain(run, backend, ep);
    CHECK(run.interactions().empty());
    evaluate(run, {0.9});
    CHECK(run.report()["tables"]["interaction"].is_null());
    for (const auto& p : run.report()["pairs"]) CHECK(p["follow_up"].is_null());
}

TEST_CASE("an interrupted refinement resumes where it stopped") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    ingest(run, experiences::generate_synthetic(9, 5, {}), "c");
    classify(run, 0.68);
    infer(run);
    narrate(run, NarrateParams{{3}, 1});
    REQUIRE(run.narratives().size() == 10);

    ExplainParams ep;
    ep.in_flight = 1;
    BudgetBackend flaky(8);  // four narratives with their follow-up
    CHECK_THROWS_AS(explain(run, flaky, ep), BackendError);
    CHECK(run.state().stage() == Stage::narrated);
    CHECK(fs::exists(run.file("explanations.partial.jsonl")));

    BudgetBackend rest(100);
    explain(run, rest, ep);
    CHECK(rest.calls() == 12);
    CHECK(run.explanations().size() == 10);
    CHECK_FALSE(fs::exists(run.file("explanations.partial.jsonl")));

    testing::TempDir other;
    RunDir clean(other.path() / "r");
    ingest(clean, experiences::generate_synthetic(9, 5, {}), "c");
    classify(clean, 0.68);
    infer(clean);
    narrate(clean, NarrateParams{{3}, 1});
    refine::DeterministicBackend backend;
    explain(clean, backend, ep);
    CHECK(read_file(run.file("explanations.jsonl")) == read_file(clean.file("explanations.jsonl")));
    CHECK(read_file(run.file("interactions.jsonl")) == read_file(clean.file("interactions.jsonl")));
}

TEST_CASE("follow-ups saved on a run are read back") {
    testing::TempDir tmp;
    RunDir run(tmp.path() / "r");
    refine::DeterministicBackend backend;
    run_to(run, Stage::refined, backend);
    auto all = run.explanations();
    refine::follow_up(all[7], refine::kShortenRequest, backend);
    run.save_explanations(all);
    const auto back = run.explanations();
    CHECK(back[7].revisions.size() == 2);
    CHECK(back[6].revisions.size() == 1);
    CHECK(read_file(run.file("explanations.txt")).find("r1: ") != std::string::npos);
}

TEST_CASE("two runs are byte-identical") {
    testing::TempDir a;
    testing::TempDir b;
    RunDir ra(a.path() / "r");
    RunDir rb(b.path() / "r");
    refine::DeterministicBackend backend;
    run_to(ra, Stage::evaluated, backend);
    run_to(rb, Stage::evaluated, backend);
    for (auto s : kStages) {
        for (const auto& f : stage_artifacts(s)) CHECK_MESSAGE(read_file(ra.file(f)) == read_file(rb.file(f)), f);
    }
}

TEST_CASE("atomic writes replace the file") {
    testing::TempDir tmp;
    const auto p = tmp.path() / "x.txt";
    write_file_atomic(p, "one");
    write_file_atomic(p, "two");
    CHECK(read_file(p) == "two");
    CHECK_FALSE(fs::exists(tmp.path() / "x.txt.tmp"));
    CHECK_THROWS_AS(read_file(tmp.path() / "missing"), DataError);
}

}

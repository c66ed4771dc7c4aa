#pragma once

// Stage runner over a run directory. Every stage reads the artifacts of the
// one before it and writes its own files, so runs can be resumed and
// inspected with ordinary tools.
//
//   ingested    corpus.json properties.json store-ingested.nt
//   classified  hdi.json store-classified.nt
//   inferred    inference.json store-inferred.nt
//   narrated    narratives.jsonl narratives.txt
//   refined     explanations.jsonl explanations.txt interactions.jsonl
//   evaluated   report.json report.txt
//
// state.json records the stage reached and the parameters of each stage.
//
// explanations.jsonl holds one session per narrative with its revision 0;
// follow-ups from the REPL or the service append to it. interactions.jsonl
// holds a copy of each session after the batch follow-up request and feeds
// the interaction table of the report.

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planex/experiences.hpp"
#include "planex/kstore.hpp"
#include "planex/narrative.hpp"
#include "planex/refine.hpp"
#include "planex/stats.hpp"
#include "planex/typicality.hpp"

namespace planex::pipeline {

enum class Stage { ingested, classified, inferred, narrated, refined, evaluated };

inline constexpr std::array<Stage, 6> kStages = {Stage::ingested, Stage::classified, Stage::inferred,
                                                 Stage::narrated, Stage::refined,    Stage::evaluated};

std::string to_string(Stage s);
Stage parse_stage(std::string_view s);
std::vector<std::string> stage_artifacts(Stage s);

struct StageRecord {
    Stage stage;
    nlohmann::json params;
    std::vector<std::string> artifacts;
};

struct RunState {
    std::string corpus_id;
    std::vector<StageRecord> completed;  // in stage order

    std::optional<Stage> stage() const;
    bool reached(Stage s) const;
    nlohmann::json to_json() const;
    static RunState from_json(const nlohmann::json& j);
};

// What to do when a stage has already run: redo it (dropping everything
// downstream) or refuse with StageError.
enum class Rerun { allow, forbid };

class RunDir {
public:
    explicit RunDir(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path file(std::string_view name) const { return dir_ / std::string(name); }
    bool exists() const;
    // Throws DataError when state.json is missing or malformed.
    RunState state() const;

    std::vector<experiences::ExperienceRecord> corpus() const;
    std::vector<experiences::PlanProperties> properties() const;
    // The store as left by the latest store-writing stage.
    kstore::KnowledgeBase store() const;
    std::map<vocab::PropertyKind, typicality::HdiInterval> hdi() const;
    nlohmann::json inference() const;
    std::vector<narrative::Narrative> narratives() const;
    std::vector<refine::Refinement> explanations() const;
    std::vector<refine::Refinement> interactions() const;
    nlohmann::json report() const;

    // Rewrites explanations.jsonl and .txt (follow-ups append revisions).
    void save_explanations(const std::vector<refine::Refinement>& refinements) const;

private:
    std::filesystem::path dir_;
};

struct NarrateParams {
    std::vector<int> levels{1, 2, 3};
    std::size_t threads = 0;
};

struct ExplainParams {
    std::string follow_up{refine::kShortenRequest};  // empty: no follow-up
    std::size_t in_flight = 4;
    std::function<void(std::size_t done, std::size_t total)> progress;
};

struct EvaluateParams {
    std::optional<double> mu0;  // required
};

RunState ingest(const RunDir& run, const std::vector<experiences::ExperienceRecord>& corpus,
                const std::string& corpus_id, const nlohmann::json& params = nlohmann::json::object(),
                Rerun rerun = Rerun::allow);
RunState classify(const RunDir& run, double alpha, Rerun rerun = Rerun::allow);
RunState infer(const RunDir& run, Rerun rerun = Rerun::allow);
RunState narrate(const RunDir& run, const NarrateParams& params, Rerun rerun = Rerun::allow);
// Narratives already refined in an interrupted attempt (explanations.partial.jsonl)
// are kept and skipped.
RunState explain(const RunDir& run, refine::RefinerBackend& backend, const ExplainParams& params,
                 Rerun rerun = Rerun::allow);
RunState evaluate(const RunDir& run, const EvaluateParams& params, Rerun rerun = Rerun::allow);

// Throws StageError unless `stage` may run now.
void check_can_run(const RunState& state, Stage stage, Rerun rerun);

// Per-narrative metrics as stored in report.json.
struct PairReport {
    std::string narrative_ref;
    std::string pair_id;
    int level = 1;
    evalmetrics::MetricsReport baseline;
    evalmetrics::MetricsReport explanation;
    std::optional<evalmetrics::MetricsReport> follow_up;
};

nlohmann::json to_json(const PairReport& p);

// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

}  // namespace planex::pipeline

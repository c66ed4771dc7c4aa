#include "planex/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "planex/error.hpp"
#include "planex/inference.hpp"
#include "planex/parallel.hpp"

namespace planex::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kStateFile = "state.json";
constexpr std::string_view kPartialFile = "explanations.partial.jsonl";

std::string store_file(Stage s) { return "store-" + to_string(s) + ".nt"; }

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw DataError(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError(path.filename().string() + ": " + e.what());
    }
}

std::string dump_line(const json& j) { return j.dump() + "\n"; }

void save_state(const RunDir& run, const RunState& state) {
    write_file_atomic(run.file(kStateFile), state.to_json().dump(2) + "\n");
}

void save_store(const RunDir& run, const kstore::KnowledgeBase& kb, Stage stage) {
    std::ostringstream os;
    kb.write(os);
    write_file_atomic(run.file(store_file(stage)), os.str());
}

// Drops `stage` and everything after it from the state and the directory.
void truncate_from(const RunDir& run, RunState& state, Stage stage) {
    auto it = std::find_if(state.completed.begin(), state.completed.end(),
                           [&](const StageRecord& r) { return r.stage >= stage; });
    for (auto r = it; r != state.completed.end(); ++r) {
        for (const auto& name : r->artifacts) fs::remove(run.file(name));
    }
    if (it == state.completed.end()) return;
    state.completed.erase(it, state.completed.end());
    save_state(run, state);
}

RunState begin_stage(const RunDir& run, Stage stage, Rerun rerun) {
    RunState state = run.state();
    check_can_run(state, stage, rerun);
    truncate_from(run, state, stage);
    return state;
}

RunState finish_stage(const RunDir& run, RunState state, Stage stage, json params) {
    state.completed.push_back({stage, std::move(params), stage_artifacts(stage)});
    save_state(run, state);
    return state;
}

std::string explanations_text(const std::vector<refine::Refinement>& refinements) {
    std::string out;
    for (const auto& r : refinements) {
        out += "[" + r.session.narrative_ref + "]\n";
        for (const auto& e : r.revisions) out += "  r" + std::to_string(e.revision) + ": " + e.text + "\n";
    }
    return out;
}

evalmetrics::MetricsReport baseline_report(const std::string& text) {
    evalmetrics::MetricsReport r;
    r.n_words = evalmetrics::word_count(text);
    r.fres = evalmetrics::fres(text);
    return r;
}

}  // namespace

std::string to_string(Stage s) {
    switch (s) {
        case Stage::ingested: return "ingested";
        case Stage::classified: return "classified";
        case Stage::inferred: return "inferred";
        case Stage::narrated: return "narrated";
        case Stage::refined: return "refined";
        case Stage::evaluated: return "evaluated";
    }
    return "";
}

Stage parse_stage(std::string_view s) {
    for (auto st : kStages) {
        if (to_string(st) == s) return st;
    }
    throw InvalidArgument("unknown stage '" + std::string(s) + "'");
}

std::vector<std::string> stage_artifacts(Stage s) {
    switch (s) {
        case Stage::ingested: return {"corpus.json", "properties.json", store_file(s)};
        case Stage::classified: return {"hdi.json", store_file(s)};
        case Stage::inferred: return {"inference.json", store_file(s)};
        case Stage::narrated: return {"narratives.jsonl", "narratives.txt"};
        case Stage::refined: return {"explanations.jsonl", "explanations.txt", "interactions.jsonl"};
        case Stage::evaluated: return {"report.json", "report.txt"};
    }
    return {};
}

std::optional<Stage> RunState::stage() const {
    if (completed.empty()) return std::nullopt;
    return completed.back().stage;
}

bool RunState::reached(Stage s) const {
    auto st = stage();
    return st && *st >= s;
}

json RunState::to_json() const {
    json stages = json::array();
    for (const auto& r : completed) {
        stages.push_back({{"stage", pipeline::to_string(r.stage)}, {"params", r.params}, {"artifacts", r.artifacts}});
    }
    auto st = stage();
    return {{"corpus_id", corpus_id},
            {"stage", st ? json(pipeline::to_string(*st)) : json(nullptr)},
            {"completed", stages}};
}

RunState RunState::from_json(const json& j) {
    try {
        RunState s;
        s.corpus_id = j.at("corpus_id").get<std::string>();
        for (const auto& r : j.at("completed")) {
            s.completed.push_back({parse_stage(r.at("stage").get<std::string>()), r.value("params", json::object()),
                                   r.at("artifacts").get<std::vector<std::string>>()});
        }
        for (std::size_t i = 0; i < s.completed.size(); ++i) {
            if (s.completed[i].stage != kStages[i]) throw DataError("state.json: stages out of order");
        }
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("state.json: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("state.json: ") + e.what());
    }
}

void check_can_run(const RunState& state, Stage stage, Rerun rerun) {
    const auto current = state.stage();
    if (stage != Stage::ingested) {
        const auto prev = static_cast<Stage>(static_cast<int>(stage) - 1);
        if (!current || *current < prev) {
            throw StageError("cannot run " + to_string(stage) + ": stage " + to_string(prev) + " has not completed");
        }
    }
    if (rerun == Rerun::forbid && current && *current >= stage) {
        throw StageError("stage " + to_string(stage) + " has already completed");
    }
}

// ---------------------------------------------------------------------------

RunDir::RunDir(fs::path dir) : dir_(std::move(dir)) {}

bool RunDir::exists() const { return fs::exists(file(kStateFile)); }

RunState RunDir::state() const {
    if (!exists()) throw DataError("no run at " + dir_.string() + " (state.json missing)");
    return RunState::from_json(read_json(file(kStateFile)));
}

std::vector<experiences::ExperienceRecord> RunDir::corpus() const {
    return experiences::load_experiences(file("corpus.json"));
}

std::vector<experiences::PlanProperties> RunDir::properties() const {
    const auto j = read_json(file("properties.json"));
    if (!j.is_array()) throw DataError("properties.json: expected an array");
    std::vector<experiences::PlanProperties> out;
    for (const auto& p : j) out.push_back(experiences::properties_from_json(p));
    return out;
}

kstore::KnowledgeBase RunDir::store() const {
    const auto state = this->state();
    for (auto it = state.completed.rbegin(); it != state.completed.rend(); ++it) {
        const auto name = store_file(it->stage);
        if (std::find(it->artifacts.begin(), it->artifacts.end(), name) == it->artifacts.end()) continue;
        std::ifstream in(file(name), std::ios::binary);
        if (!in) throw DataError("cannot open " + file(name).string());
        return kstore::KnowledgeBase::read(in);
    }
    throw StageError("run has no store yet");
}

std::map<vocab::PropertyKind, typicality::HdiInterval> RunDir::hdi() const {
    const auto j = read_json(file("hdi.json"));
    std::map<vocab::PropertyKind, typicality::HdiInterval> out;
    try {
        for (const auto& iv : j.at("intervals")) {
            auto h = typicality::hdi_from_json(iv);
            if (!h.property) throw DataError("hdi.json: interval without property");
            out[*h.property] = h;
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("hdi.json: ") + e.what());
    }
    return out;
}

json RunDir::inference() const { return read_json(file("inference.json")); }

std::vector<narrative::Narrative> RunDir::narratives() const {
    std::vector<narrative::Narrative> out;
    for (const auto& j : read_jsonl(file("narratives.jsonl"))) out.push_back(narrative::narrative_from_json(j));
    return out;
}

std::vector<refine::Refinement> RunDir::explanations() const {
    std::vector<refine::Refinement> out;
    for (const auto& j : read_jsonl(file("explanations.jsonl"))) out.push_back(refine::refinement_from_json(j));
    return out;
}

std::vector<refine::Refinement> RunDir::interactions() const {
    std::vector<refine::Refinement> out;
    for (const auto& j : read_jsonl(file("interactions.jsonl"))) out.push_back(refine::refinement_from_json(j));
    return out;
}

json RunDir::report() const { return read_json(file("report.json")); }

void RunDir::save_explanations(const std::vector<refine::Refinement>& refinements) const {
    std::string lines;
    for (const auto& r : refinements) lines += dump_line(refine::to_json(r));
    write_file_atomic(file("explanations.jsonl"), lines);
    write_file_atomic(file("explanations.txt"), explanations_text(refinements));
}

// ---------------------------------------------------------------------------

RunState ingest(const RunDir& run, const std::vector<experiences::ExperienceRecord>& corpus,
                const std::string& corpus_id, const json& params, Rerun rerun) {
    if (corpus.size() < 2) throw InvalidArgument("a corpus needs at least two plans");
    RunState state;
    if (run.exists()) {
        state = run.state();
        check_can_run(state, Stage::ingested, rerun);
        truncate_from(run, state, Stage::ingested);
    }
    state.corpus_id = corpus_id;

    std::set<std::string> seen;
    kstore::KnowledgeBase kb;
    json props = json::array();
    for (const auto& rec : corpus) {
        experiences::validate(rec);
        if (!seen.insert(rec.plan_id).second) throw DataError("duplicate plan_id '" + rec.plan_id + "'");
        const auto p = experiences::extract_properties(rec);
        experiences::ground_properties(kb, p);
        props.push_back(experiences::to_json(p));
    }

    fs::create_directories(run.dir());
    write_file_atomic(run.file("corpus.json"), experiences::to_json(corpus).dump(2) + "\n");
    write_file_atomic(run.file("properties.json"), props.dump(2) + "\n");
    save_store(run, kb, Stage::ingested);
    json p = params;
    p["plans"] = corpus.size();
    return finish_stage(run, std::move(state), Stage::ingested, std::move(p));
}

RunState classify(const RunDir& run, double alpha, Rerun rerun) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    auto state = begin_stage(run, Stage::classified, rerun);
    auto kb = run.store();
    const auto props = run.properties();
    const auto intervals = typicality::classify_corpus(kb, props, alpha);

    json ivs = json::array();
    for (const auto& [kind, iv] : intervals) ivs.push_back(typicality::to_json(iv));
    write_file_atomic(run.file("hdi.json"), json{{"alpha", alpha}, {"intervals", ivs}}.dump(2) + "\n");
    save_store(run, kb, Stage::classified);
    return finish_stage(run, std::move(state), Stage::classified, {{"alpha", alpha}});
}

RunState infer(const RunDir& run, Rerun rerun) {
    auto state = begin_stage(run, Stage::inferred, rerun);
    auto kb = run.store();
    auto plans = inference::plan_ids(kb);
    std::sort(plans.begin(), plans.end());
    const auto summary = inference::run_all(kb, plans);

    json labels = json::array();
    for (const auto& id : plans) {
        auto cls = kb.query(kstore::Pattern{vocab::plan_term(id), vocab::plan_classified_by(), std::nullopt});
        std::string label = cls.empty() ? "" : kstore::render(cls.front().object);
        labels.push_back({{"plan_id", id}, {"class", label}});
    }
    json out{{"pairs_compared", summary.pairs_compared},
             {"typical", summary.typical},
             {"atypical", summary.atypical},
             {"triples", kb.size()},
             {"plans", labels}};
    write_file_atomic(run.file("inference.json"), out.dump(2) + "\n");
    save_store(run, kb, Stage::inferred);
    return finish_stage(run, std::move(state), Stage::inferred, json::object());
}

RunState narrate(const RunDir& run, const NarrateParams& params, Rerun rerun) {
    if (params.levels.empty()) throw InvalidArgument("narrate: no specificity level requested");
    std::vector<int> levels = params.levels;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (int l : levels) narrative::specificity_from_int(l);

    auto state = begin_stage(run, Stage::narrated, rerun);
    const auto kb = run.store();
    std::string lines;
    std::string text;
    for (int l : levels) {
        for (const auto& n : narrative::narrate_all(kb, narrative::specificity_from_int(l),
                                                    kstore::TimeInterval::always(), params.threads)) {
            lines += dump_line(narrative::to_json(n));
            text += "[" + n.ref() + "] " + n.text + "\n";
        }
    }
    write_file_atomic(run.file("narratives.jsonl"), lines);
    write_file_atomic(run.file("narratives.txt"), text);
    return finish_stage(run, std::move(state), Stage::narrated, {{"levels", levels}});
}

RunState explain(const RunDir& run, refine::RefinerBackend& backend, const ExplainParams& params, Rerun rerun) {
    auto state = begin_stage(run, Stage::refined, rerun);
    const auto narratives = run.narratives();
    const bool interact = !params.follow_up.empty();

    struct Outcome {
        refine::Refinement explanation;
        std::optional<refine::Refinement> interaction;
    };

    // Keep whatever an interrupted attempt finished.
    std::map<std::string, Outcome> done;
    const auto partial_path = run.file(kPartialFile);
    if (fs::exists(partial_path)) {
        for (const auto& j : read_jsonl(partial_path)) {
            Outcome o{refine::refinement_from_json(j.at("explanation")), std::nullopt};
            if (!j["interaction"].is_null()) o.interaction = refine::refinement_from_json(j["interaction"]);
            if (interact == o.interaction.has_value()) done[o.explanation.session.narrative_ref] = std::move(o);
        }
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < narratives.size(); ++i) {
        if (!done.count(narratives[i].ref())) todo.push_back(i);
    }

    std::vector<Outcome> fresh(todo.size());
    std::mutex partial_mutex;
    std::ofstream partial(partial_path, std::ios::binary | std::ios::app);
    std::atomic<std::size_t> finished{done.size()};
    parallel_for(
        todo.size(),
        [&](std::size_t t) {
            Outcome o{refine::refine(narratives[todo[t]], backend), std::nullopt};
            if (interact) {
                o.interaction = o.explanation;
                refine::follow_up(*o.interaction, params.follow_up, backend);
            }
            const json line{{"explanation", refine::to_json(o.explanation)},
                            {"interaction", o.interaction ? refine::to_json(*o.interaction) : json(nullptr)}};
            std::lock_guard lock(partial_mutex);
            partial << dump_line(line) << std::flush;
            fresh[t] = std::move(o);
            const auto count = ++finished;
            if (params.progress) params.progress(count, narratives.size());
        },
        std::max<std::size_t>(params.in_flight, 1));
    partial.close();

    std::vector<refine::Refinement> explanations;
    std::string interactions;
    std::size_t next_fresh = 0;
    for (const auto& n : narratives) {
        auto it = done.find(n.ref());
        Outcome o = it != done.end() ? std::move(it->second) : std::move(fresh[next_fresh++]);
        if (o.interaction) interactions += dump_line(refine::to_json(*o.interaction));
        explanations.push_back(std::move(o.explanation));
    }
    run.save_explanations(explanations);
    write_file_atomic(run.file("interactions.jsonl"), interactions);
    fs::remove(partial_path);
    return finish_stage(run, std::move(state), Stage::refined,
                        {{"backend", backend.name()}, {"follow_up", params.follow_up}, {"in_flight", params.in_flight}});
}

json to_json(const PairReport& p) {
    return {{"narrative_ref", p.narrative_ref},
            {"pair_id", p.pair_id},
            {"level", p.level},
            {"baseline", evalmetrics::to_json(p.baseline)},
            {"explanation", evalmetrics::to_json(p.explanation)},
            {"follow_up", p.follow_up ? evalmetrics::to_json(*p.follow_up) : json(nullptr)}};
}

RunState evaluate(const RunDir& run, const EvaluateParams& params, Rerun rerun) {
    if (!params.mu0) throw InvalidArgument("evaluate: mu0 is required (null value of the similarity test)");
    auto state = begin_stage(run, Stage::evaluated, rerun);
    const auto narratives = run.narratives();
    const auto refinements = run.explanations();
    const auto interactions = run.interactions();
    std::map<std::string, const refine::Refinement*> by_ref;
    for (const auto& r : refinements) by_ref[r.session.narrative_ref] = &r;
    std::map<std::string, const refine::Refinement*> followed;
    for (const auto& r : interactions) followed[r.session.narrative_ref] = &r;

    stats::MethodResults baseline{"Baseline", {}, {}};
    stats::MethodResults ours{"Refined", {}, {}};
    stats::MethodResults interactive{"Follow-up", {}, {}};
    bool all_followed = true;
    std::vector<PairReport> pairs;
    for (const auto& n : narratives) {
        auto it = by_ref.find(n.ref());
        if (it == by_ref.end()) throw StageError("narrative " + n.ref() + " has no explanation");
        const auto& r = *it->second;
        const auto li = static_cast<std::size_t>(narrative::to_int(n.level) - 1);

        PairReport p;
        p.narrative_ref = n.ref();
        p.pair_id = n.pair_id();
        p.level = narrative::to_int(n.level);
        p.baseline = baseline_report(n.text);
        p.explanation = evalmetrics::report(n.text, r.revisions.at(0).text);
        if (auto f = followed.find(n.ref()); f != followed.end() && f->second->revisions.size() >= 2) {
            p.follow_up = evalmetrics::report(n.text, f->second->revisions.at(1).text);
        }

        baseline.pair_ids[li].push_back(p.pair_id);
        baseline.reports[li].push_back(p.baseline);
        ours.pair_ids[li].push_back(p.pair_id);
        ours.reports[li].push_back(p.explanation);
        if (p.follow_up) {
            interactive.pair_ids[li].push_back(p.pair_id);
            interactive.reports[li].push_back(*p.follow_up);
        } else {
            all_followed = false;
        }
        pairs.push_back(std::move(p));
    }

    const auto main_table = stats::build_summary("Baseline narrative vs refined explanation", baseline, ours, params.mu0);
    json tables{{"refinement", stats::to_json(main_table)}};
    std::string text = stats::render_text(main_table);
    if (all_followed && !pairs.empty()) {
        const auto follow_table =
            stats::build_summary("Refined explanation vs follow-up revision", ours, interactive, std::nullopt);
        tables["interaction"] = stats::to_json(follow_table);
        text += "\n" + stats::render_text(follow_table);
    } else {
        tables["interaction"] = nullptr;
    }

    json pair_json = json::array();
    for (const auto& p : pairs) pair_json.push_back(to_json(p));
    const json report{{"corpus_id", state.corpus_id},
                      {"mu0", *params.mu0},
                      {"narratives", pairs.size()},
                      {"tables", tables},
                      {"pairs", pair_json}};
    write_file_atomic(run.file("report.json"), report.dump(2) + "\n");
    write_file_atomic(run.file("report.txt"), text);
    return finish_stage(run, std::move(state), Stage::evaluated, {{"mu0", *params.mu0}});
}

// ---------------------------------------------------------------------------

void write_file_atomic(const fs::path& path, std::string_view text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace planex::pipeline

#pragma once

// Plan-execution experiences: loading, synthesis, property extraction and
// grounding of the extracted properties into the store.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planex/kstore.hpp"
#include "planex/vocab.hpp"

namespace planex::experiences {

enum class Actor { human, robot };
enum class Action { inspect, re_inspect };

struct TaskEvent {
    Actor actor = Actor::robot;
    Action action = Action::inspect;
    std::string item;
    double start = 0.0;
    double end = 0.0;
    bool doubted = false;

    friend bool operator==(const TaskEvent&, const TaskEvent&) = default;
};

struct ExperienceRecord {
    std::string plan_id;
    std::vector<TaskEvent> events;

    friend bool operator==(const ExperienceRecord&, const ExperienceRecord&) = default;
};

struct PlanProperties {
    std::string plan_id;
    std::int64_t num_tasks = 0;
    double makespan = 0.0;
    std::int64_t cost = 0;

    double value(vocab::PropertyKind k) const;
    friend bool operator==(const PlanProperties&, const PlanProperties&) = default;
};

// Synthetic generator settings. The human re-inspects every item the robot
// doubted; `human_extra_prob` adds unsolicited human inspections on top.
struct GenConfig {
    int tray_size = 12;
    double doubt_prob = 0.2;
    double duration_min = 1.5;
    double duration_max = 3.0;
    double human_speed_factor = 1.5;
    double human_extra_prob = 0.0;

    void validate() const;
    static GenConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Identifiers are restricted to [A-Za-z0-9_-] so they can be used directly
// as store local names.
bool valid_plan_id(std::string_view id);

// Throws DataError naming the offending field.
void validate(const ExperienceRecord& rec);

PlanProperties extract_properties(const ExperienceRecord& rec);

std::vector<ExperienceRecord> parse_experiences(std::string_view text);
std::vector<ExperienceRecord> load_experiences(const std::filesystem::path& path);
nlohmann::json to_json(const std::vector<ExperienceRecord>& records);
void save_experiences(const std::filesystem::path& path, const std::vector<ExperienceRecord>& records);

std::vector<ExperienceRecord> generate_synthetic(std::uint64_t seed, int n, const GenConfig& cfg);

// Asserts the plan, its three quality entities and their values.
void ground_properties(kstore::KnowledgeBase& kb, const PlanProperties& p);

// Reads grounded properties back from the store.
PlanProperties read_properties(const kstore::KnowledgeBase& kb, std::string_view plan_id);

nlohmann::json to_json(const PlanProperties& p);
PlanProperties properties_from_json(const nlohmann::json& j);

}  // namespace planex::experiences

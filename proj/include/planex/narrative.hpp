#pragma once

// Contrastive narratives for pairs of plans, retrieved from the store at one
// of three specificity levels and rendered with fixed connectors.
//
//   level 1  plan-level comparison predicates between the two plans
//   level 2  + quality attributions and the plan classifications
//   level 3  + the value of every quality

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planex/kstore.hpp"

namespace planex::narrative {

enum class Specificity { low = 1, medium = 2, high = 3 };

Specificity specificity_from_int(int level);
inline int to_int(Specificity s) { return static_cast<int>(s); }

struct Narrative {
    std::string a;  // subject plan id
    std::string b;
    Specificity level = Specificity::low;
    std::vector<kstore::Triple> tuples;
    std::size_t tuple_count = 0;
    std::string text;

    std::string pair_id() const;
    // pair_id + "@" + level
    std::string ref() const;
};

std::string pair_id(std::string_view a, std::string_view b);
// Splits a pair id back into its two plan ids.
std::pair<std::string, std::string> split_pair_id(std::string_view id);

Narrative retrieve_pair(const kstore::KnowledgeBase& kb, std::string_view a, std::string_view b, Specificity level,
                        const kstore::TimeInterval& within = kstore::TimeInterval::always());

// All n(n-1)/2 pairs, ordered by plan id; the smaller id is the subject.
std::vector<Narrative> narrate_all(const kstore::KnowledgeBase& kb, Specificity level,
                                   const kstore::TimeInterval& within = kstore::TimeInterval::always(),
                                   std::size_t threads = 0);

// "isCheaperPlanThan" -> "is cheaper plan than"; known predicates come from a
// fixed table, anything else is split on case changes.
std::string predicate_phrase(const kstore::Term& predicate);
std::string split_camel_case(std::string_view name);
// Inverse of predicate_phrase for the known vocabulary.
std::optional<kstore::Term> predicate_for_phrase(std::string_view phrase);

// Local name with underscores shown as spaces.
std::string display_name(const kstore::Term& entity);

// Sentence structure recovered from narrative text.
struct Clause {
    std::string subject;                  // display name, unquoted
    std::vector<std::string> predicates;  // phrases joined by "and"
    std::string object;                   // display name or literal lexical form
};

struct Sentence {
    std::vector<Clause> clauses;  // two clauses for "...; while ..."
};

struct ParsedNarrative {
    std::vector<Sentence> sentences;
    // Set when the text is the no-contrast fallback.
    std::optional<std::pair<std::string, std::string>> no_contrast;
};

// Throws DataError when the text does not follow the narrative grammar.
ParsedNarrative parse(std::string_view text);

nlohmann::json to_json(const Narrative& n);
Narrative narrative_from_json(const nlohmann::json& j);

}  // namespace planex::narrative

#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "planex/kstore.hpp"
#include "planex/typicality.hpp"

namespace planex::testing {

std::filesystem::path fixture(std::string_view name);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);
// Fixture text without its trailing newline.
std::string fixture_text(std::string_view name);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view tag = "planex");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Plan_X (12, 28.20, 0) and Plan_Y (18, 40.35, 3); X typical, Y atypical
// (its makespan falls outside the interval); inference already run.
kstore::KnowledgeBase worked_pair_store();

// Replaces the display names of the two plans with <A> and <B>.
std::string normalize_ids(std::string text, std::string_view a, std::string_view b);

// Exhaustive search over every k-window of the sorted sample; leftmost wins.
typicality::HdiInterval brute_force_hdi(std::span<const double> sample, double alpha);

// Random sample of n values with many ties (small integer grid) or spread
// decimals, depending on the draw.
std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n);

}  // namespace planex::testing

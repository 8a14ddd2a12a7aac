#pragma once
// Arena score: the six per-dataset primary metrics, each already on a 0-100
// scale, summed into a single 0-600 composite, plus leaderboard rendering.

#include <string>
#include <vector>

#include "surgbench/datamodel.hpp"

namespace surgbench {

struct ArenaVector {
  double cholec80_phase_accuracy = 0;
  double sar_rarp_action_accuracy = 0;
  double cholect50_triplet_accuracy = 0;
  double endovis2017_miou = 0;
  double endovis2018_vqa_accuracy = 0;
  double endoscape_cvs_average_accuracy = 0;
};

// Exact sum of the six components. Normalization is identity: the components
// are already percentages. Throws std::domain_error when any component is
// outside [0, 100].
double arena_score(const ArenaVector& v);

struct LeaderboardEntry {
  std::string model;
  std::string institute;
  Protocol protocol = Protocol::OV;
  ArenaVector vector;
  double score = 0;  // filled by leaderboard() as arena_score(vector)
};

struct Leaderboard {
  std::vector<LeaderboardEntry> ranked;  // descending score, ties by model name
  std::string text;                      // fixed-width table
  std::string json;                      // machine-readable rendering
};

Leaderboard leaderboard(std::vector<LeaderboardEntry> entries);

// Arena vector serialization used by report directories.
std::string arena_vector_to_json(const ArenaVector& v);
ArenaVector arena_vector_from_json(const std::string& text);

}  // namespace surgbench

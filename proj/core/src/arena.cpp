#include "surgbench/arena.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace surgbench {

namespace {

struct Component {
  const char* name;
  double ArenaVector::* field;
};

constexpr Component kComponents[] = {
    {"cholec80_phase_accuracy", &ArenaVector::cholec80_phase_accuracy},
    {"sar_rarp_action_accuracy", &ArenaVector::sar_rarp_action_accuracy},
    {"cholect50_triplet_accuracy", &ArenaVector::cholect50_triplet_accuracy},
    {"endovis2017_miou", &ArenaVector::endovis2017_miou},
    {"endovis2018_vqa_accuracy", &ArenaVector::endovis2018_vqa_accuracy},
    {"endoscape_cvs_average_accuracy", &ArenaVector::endoscape_cvs_average_accuracy},
};

std::string fixed(double v, int width, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%*.*f", width, decimals, v);
  return buf;
}

}  // namespace

double arena_score(const ArenaVector& v) {
  double sum = 0.0;
  for (const auto& c : kComponents) {
    const double value = v.*(c.field);
    if (value < 0.0 || value > 100.0) {
      throw std::domain_error(std::string("arena_score: component ") + c.name +
                              " outside [0, 100]");
    }
    sum += value;
  }
  return sum;
}

Leaderboard leaderboard(std::vector<LeaderboardEntry> entries) {
  if (entries.empty()) throw std::invalid_argument("leaderboard: need at least one entry");
  for (auto& e : entries) e.score = arena_score(e.vector);
  std::sort(entries.begin(), entries.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.model < b.model;
  });

  Leaderboard board;
  board.ranked = entries;

  std::string text;
  char header[256];
  std::snprintf(header, sizeof(header), "%-4s %-32s %-18s %-5s %9s %9s %10s %10s %9s %8s %9s\n",
                "Rank", "Model", "Institute", "Eval", "Cholec80", "SAR-RARP", "CholecT50",
                "EndoVis17", "EV18-VQA", "CVS", "Arena");
  text += header;
  text += std::string(130, '-') + "\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    char row[512];
    std::snprintf(row, sizeof(row), "%-4zu %-32.32s %-18.18s %-5s %s %s %s %s %s %s %s\n", i + 1,
                  e.model.c_str(), e.institute.c_str(),
                  e.protocol == Protocol::OV ? "OV" : "MCQ",
                  fixed(e.vector.cholec80_phase_accuracy, 9, 2).c_str(),
                  fixed(e.vector.sar_rarp_action_accuracy, 9, 2).c_str(),
                  fixed(e.vector.cholect50_triplet_accuracy, 10, 2).c_str(),
                  fixed(e.vector.endovis2017_miou, 10, 2).c_str(),
                  fixed(e.vector.endovis2018_vqa_accuracy, 9, 2).c_str(),
                  fixed(e.vector.endoscape_cvs_average_accuracy, 8, 2).c_str(),
                  fixed(e.score, 9, 2).c_str());
    text += row;
  }
  board.text = std::move(text);

  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    nlohmann::json ej;
    ej["rank"] = i + 1;
    ej["model"] = e.model;
    ej["institute"] = e.institute;
    ej["protocol"] = std::string(to_string(e.protocol));
    for (const auto& c : kComponents) ej[c.name] = e.vector.*(c.field);
    ej["arena_score"] = e.score;
    j.push_back(std::move(ej));
  }
  board.json = j.dump(2);
  return board;
}

std::string arena_vector_to_json(const ArenaVector& v) {
  nlohmann::json j;
  for (const auto& c : kComponents) j[c.name] = v.*(c.field);
  return j.dump(2);
}

ArenaVector arena_vector_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ArenaVector v;
  for (const auto& c : kComponents) v.*(c.field) = j.at(c.name).get<double>();
  return v;
}

}  // namespace surgbench

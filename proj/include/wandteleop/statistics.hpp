#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wandteleop {

struct WilcoxonResult {
  bool tested = false;      // false when every paired difference is zero
  std::size_t n = 0;        // non-zero differences used
  double statistic = 0.0;   // W+: rank sum of positive differences a - b
  double w_minus = 0.0;     // rank sum of negative differences
  double p_value = 1.0;     // two-sided
  bool exact = false;
};

// Wilcoxon signed-rank test on paired samples. Zero differences are dropped
// and tied magnitudes get average ranks. Exact null distribution up to 12
// non-zero pairs, tie-corrected normal approximation beyond.
// Throws std::invalid_argument unless a and b have the same length >= 5.
WilcoxonResult wilcoxon_paired(std::span<const double> a, std::span<const double> b);

struct QuestionnaireEntry {
  std::string participant;
  int question = 0;
  std::string condition;
  int score = 0;  // -3 .. 3
};

// CSV with header participant,question,condition,score.
std::vector<QuestionnaireEntry> read_questionnaire_csv(std::istream& in);

struct ConditionComparison {
  int question = 0;
  std::string condition_a;
  std::string condition_b;
  WilcoxonResult result;
};

// Every pair of conditions for every question, paired by participant.
std::vector<ConditionComparison> compare_conditions(std::span<const QuestionnaireEntry> entries);

}  // namespace wandteleop

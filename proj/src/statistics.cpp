#include "wandteleop/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wandteleop {

namespace {

constexpr std::size_t kExactLimit = 12;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

WilcoxonResult wilcoxon_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("paired samples must have equal length");
  }
  if (a.size() < 5) {
    throw std::invalid_argument("paired test needs at least 5 pairs");
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (diff != 0.0) {
      d.push_back(diff);
    }
  }
  WilcoxonResult r;
  r.n = d.size();
  if (d.empty()) {
    return r;
  }
  r.tested = true;

  // Average ranks of |d|, kept doubled so tied ranks stay integral.
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
  std::vector<long> rank2(d.size());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) {
      ++j;
    }
    const long doubled = static_cast<long>(i + 1 + j + 1);  // 2 * average of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) {
      rank2[order[k]] = doubled;
    }
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  long w_plus2 = 0;
  long total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) {
      w_plus2 += rank2[i];
    }
  }
  r.statistic = 0.5 * static_cast<double>(w_plus2);
  r.w_minus = 0.5 * static_cast<double>(total2 - w_plus2);

  const double n = static_cast<double>(d.size());
  if (d.size() <= kExactLimit) {
    r.exact = true;
    // Distribution of the doubled positive-rank sum over all 2^n sign patterns.
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long rk : rank2) {
      for (long s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0.0) {
          count[static_cast<std::size_t>(s + rk)] += count[static_cast<std::size_t>(s)];
        }
      }
      reach += rk;
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(d.size()));
    double lower = 0.0;
    double upper = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (s <= w_plus2) {
        lower += count[static_cast<std::size_t>(s)];
      }
      if (s >= w_plus2) {
        upper += count[static_cast<std::size_t>(s)];
      }
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
    return r;
  }

  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = (r.statistic - mean) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return r;
}

std::vector<QuestionnaireEntry> read_questionnaire_csv(std::istream& in) {
  std::vector<QuestionnaireEntry> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(trim(cell));
    }
    if (header) {
      header = false;
      if (cells.size() != 4 || cells[0] != "participant" || cells[1] != "question" ||
          cells[2] != "condition" || cells[3] != "score") {
        throw std::runtime_error("questionnaire header must be participant,question,condition,score");
      }
      continue;
    }
    if (cells.size() != 4) {
      throw std::runtime_error("questionnaire line " + std::to_string(line_no) + ": expected 4 fields");
    }
    QuestionnaireEntry e;
    e.participant = cells[0];
    e.condition = cells[2];
    try {
      e.question = std::stoi(cells[1]);
      e.score = std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("questionnaire line " + std::to_string(line_no) + ": not an integer");
    }
    if (e.score < -3 || e.score > 3) {
      throw std::runtime_error("questionnaire line " + std::to_string(line_no) +
                               ": score outside [-3, 3]");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ConditionComparison> compare_conditions(std::span<const QuestionnaireEntry> entries) {
  std::set<int> questions;
  std::set<std::string> conditions;
  std::map<std::tuple<int, std::string, std::string>, int> score;
  for (const auto& e : entries) {
    questions.insert(e.question);
    conditions.insert(e.condition);
    score[{e.question, e.condition, e.participant}] = e.score;
  }
  std::set<std::string> participants;
  for (const auto& e : entries) {
    participants.insert(e.participant);
  }

  std::vector<ConditionComparison> out;
  const std::vector<std::string> conds(conditions.begin(), conditions.end());
  for (int q : questions) {
    for (std::size_t i = 0; i < conds.size(); ++i) {
      for (std::size_t j = i + 1; j < conds.size(); ++j) {
        std::vector<double> a, b;
        for (const auto& p : participants) {
          const auto ia = score.find({q, conds[i], p});
          const auto ib = score.find({q, conds[j], p});
          if (ia != score.end() && ib != score.end()) {
            a.push_back(ia->second);
            b.push_back(ib->second);
          }
        }
        if (a.size() < 5) {
          continue;
        }
        out.push_back({q, conds[i], conds[j], wilcoxon_paired(a, b)});
      }
    }
  }
  return out;
}

}  // namespace wandteleop

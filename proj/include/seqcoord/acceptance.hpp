#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace seqcoord {

inline constexpr std::uint64_t kAcceptanceSeed = 1;

struct CriterionResult {
  std::string name;
  bool passed = false;
  // A red criterion whose cause is analysed in `detail`; it is still printed
  // as FAIL but does not fail the suite's exit status.
  bool known_gap = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  std::string name;
  std::function<CriterionResult()> run;
};

std::vector<Criterion> acceptance_criteria();

// Runs every criterion, printing one line each as it finishes. Returns 0 when
// each criterion passed or is a known gap, 1 otherwise.
int run_acceptance(std::ostream& out, const std::string& only = "");

}  // namespace seqcoord

#pragma once

#include <span>
#include <vector>

#include "riskfuse/evaluation.hpp"

namespace riskfuse {

// Time order and score ranks reused across bootstrap replicates.
struct UnoPrepared {
  std::vector<std::size_t> by_time_desc;
  std::vector<std::size_t> rank;  // dense score rank
  std::size_t ranks = 0;
};

UnoPrepared prepare_uno(std::span<const double> score, const SurvivalData& s);
double uno_c_prepared(const UnoPrepared& u, const SurvivalData& s, double tau, Multiplicity m);

}  // namespace riskfuse

#pragma once

#include <span>
#include <vector>

namespace carloss {

// Effective sample size of one chain using Geyer's initial monotone sequence
// estimator on the empirical autocorrelations.
double effective_sample_size(std::span<const double> chain);

// Split-chain potential scale reduction: every chain is cut in half and the
// halves are compared with the between/within variance ratio. Returns 1 for a
// set of constant chains that agree, +inf when constant chains disagree.
double split_rhat(const std::vector<std::span<const double>>& chains);

}  // namespace carloss

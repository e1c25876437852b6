#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "carloss/area_model.hpp"

namespace carloss {

using Rng = std::mt19937_64;

// Independent stream for one chain, derived from (seed, chain index).
Rng make_chain_rng(std::uint64_t seed, std::uint64_t chain_index);

enum class TauPriorKind {
    half_t,         // half-Student-t on tau
    inverse_gamma,  // inverse-gamma(shape, rate) on tau^2; conjugate test configuration
};

// How tau_prior_scale enters the half-t density.
enum class TauScaleConvention {
    standard_deviation,  // t scale = sqrt(tau_prior_scale)
    variance,            // t scale = tau_prior_scale
};

struct PriorSpec {
    double sigma2_beta0 = 5.0;
    double sigma2_betaj = 5.0;
    double tau_prior_df = 15.0;
    double tau_prior_scale = 10.0;
    TauScaleConvention tau_scale_convention = TauScaleConvention::standard_deviation;
    TauPriorKind tau_prior = TauPriorKind::half_t;
    double ig_shape = 2.0;
    double ig_rate = 1.0;

    void validate() const;
    double half_t_scale() const;
    // Unnormalized log density of tau.
    double log_tau_prior(double tau) const;
};

struct SamplerConfig {
    int total_iters = 15000;
    int burn_in = 5000;
    int thin = 1;
    std::uint64_t seed = 20180401;
    double rho_step = 0.1;
    double log_tau_step = 0.2;
    bool adapt = true;
    // Lower truncation of the tau support. Only matters for exactly-fitting
    // data, where the tau posterior is improper at zero.
    double tau_floor = 1e-10;
    int chains = 1;

    int retained() const { return (total_iters - burn_in) / thin; }
    void validate() const;
};

struct ChainState {
    VectorXd beta;
    double rho = 0.0;
    double tau = 1.0;
    // z in the no-measurement-error variant, the latent process otherwise.
    VectorXd y;
};

struct GaussianConditional {
    VectorXd mean;
    MatrixXd covariance;
};

// Single-site full conditionals of the CAR model. Every update leaves the
// other components of the state untouched.
class GibbsKernel {
public:
    GibbsKernel(AreaDataset dataset, NeighborGraph graph, PriorSpec priors, double tau_floor = 1e-10);

    // beta at the least-squares fit, rho = 0, tau at the residual standard
    // deviation, y = z.
    ChainState initial_state() const;

    GaussianConditional beta_conditional(const ChainState& state) const;
    GaussianConditional latent_y_conditional(const ChainState& state) const;

    // Unnormalized log full conditional of rho; -inf outside the bounds.
    double log_rho_target(const ChainState& state, double rho) const;
    // Unnormalized log full conditional density of tau (not log tau).
    double log_tau_target(const ChainState& state, double tau) const;

    void sample_beta(ChainState& state, Rng& rng) const;
    // Random-walk Metropolis steps; return true on acceptance.
    bool sample_rho(ChainState& state, double step, Rng& rng) const;
    bool sample_tau(ChainState& state, double log_step, Rng& rng) const;
    void sample_latent_y(ChainState& state, Rng& rng) const;

    // Fitted values stored for a draw: the conditional mean given z in the
    // no-error variant, the latent draw otherwise.
    VectorXd fitted(const ChainState& state) const;

    const AreaDataset& dataset() const { return dataset_; }
    const NeighborGraph& graph() const { return graph_; }
    const PriorSpec& priors() const { return priors_; }

private:
    AreaDataset dataset_;
    NeighborGraph graph_;
    PriorSpec priors_;
    double tau_floor_;
    VectorXd prior_precision_;
};

// Accepts with probability min(1, exp(log_ratio)).
bool metropolis_accept(double log_ratio, Rng& rng);

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    double ess = 0.0;
    double split_rhat = 1.0;
};

struct PosteriorDraws {
    std::vector<std::string> region_ids;
    // beta0..betap, rho, tau
    std::vector<std::string> param_names;
    std::vector<CarParams> params;
    // M x n, row j holds the fitted values of draw j.
    MatrixXd fitted;
    int num_chains = 1;
    double rho_acceptance = 0.0;
    double tau_acceptance = 0.0;
    double rho_step = 0.0;
    double log_tau_step = 0.0;
    std::vector<ParamSummary> diagnostics;

    Eigen::Index num_draws() const { return fitted.rows(); }
    Eigen::Index num_regions() const { return fitted.cols(); }
    // M x (p + 3) matrix of beta, rho, tau.
    MatrixXd param_matrix() const;
};

// Runs a single chain (chain index selects the RNG stream).
PosteriorDraws run_chain(const AreaDataset& dataset, const NeighborGraph& graph, const PriorSpec& priors,
                         const SamplerConfig& config, int chain_index = 0);

// Runs config.chains chains concurrently and concatenates them by chain index.
// Diagnostics use all chains.
PosteriorDraws run_chains(const AreaDataset& dataset, const NeighborGraph& graph, const PriorSpec& priors,
                          const SamplerConfig& config);

// Summaries, ESS (summed over chains) and split-chain R-hat for every
// parameter, treating the draws as num_chains equal consecutive blocks.
std::vector<ParamSummary> summarize_params(const PosteriorDraws& draws);

// Names beta0..betap, rho, tau.
std::vector<std::string> param_names_for(Eigen::Index num_coefficients);

}  // namespace carloss

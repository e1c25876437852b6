#include "carloss/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "carloss/asymmetry.hpp"
#include "carloss/csv_io.hpp"
#include "carloss/errors.hpp"
#include "carloss/loss.hpp"
#include "carloss/manifest.hpp"
#include "carloss/risk.hpp"
#include "carloss/sampler.hpp"

namespace carloss::cli {

namespace fs = std::filesystem;

namespace {

struct FitOptions {
    std::string data, adjacency, out_dir;
    std::vector<std::string> scales;
    double sigma2_meas = -1.0;
    PriorSpec priors;
    std::string tau_convention = "sd";
    SamplerConfig config;
    bool no_adapt = false;
};

struct PredictOptions {
    std::string draws_dir, out_dir, output, loss;
    double lambda = 0.0;
    double gamma = 1.0;
};

struct SweepCmdOptions {
    std::string draws_dir, out_dir, output, loss, grid, observed;
    bool any_sign = false;
    double prominence = 1.5;
};

struct RiskOptions {
    std::string draws_dir, out_dir, output_prefix;
    std::vector<std::string> tables, true_losses;
};

struct ReportOptions {
    std::string draws_dir, out_dir;
    bool no_verify = false;
};

std::string join(const std::vector<std::string>& args) {
    std::string s = "carloss";
    for (const auto& a : args) s += " " + a;
    return s;
}

fs::path output_dir(const std::string& out_dir, const std::string& draws_dir) {
    return out_dir.empty() ? fs::path(draws_dir) : fs::path(out_dir);
}

int chains_of(const fs::path& dir) {
    const fs::path manifest = dir / io::kManifestFile;
    if (!fs::exists(manifest)) return 1;
    return read_manifest(manifest).config.chains;
}

std::string lambda_tag(const LossSpec& spec) {
    if (spec.family == LossFamily::squared_error) return "squared_error";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, spec.lambda);
    return to_string(spec.family) + "_" + std::string(buf, res.ptr);
}

int cmd_fit(const FitOptions& o, const std::vector<std::string>& args, std::ostream& out) {
    RunManifest manifest;
    manifest.started_utc = utc_timestamp();
    manifest.command_line = join(args);

    std::optional<double> sigma2;
    if (o.sigma2_meas >= 0.0) sigma2 = o.sigma2_meas;
    const auto scales = io::parse_scales(o.scales);
    const AreaDataset dataset = io::load_dataset(o.data, scales, sigma2);
    const NeighborGraph graph = io::load_adjacency(o.adjacency, dataset.region_ids());

    PriorSpec priors = o.priors;
    if (o.tau_convention == "sd") priors.tau_scale_convention = TauScaleConvention::standard_deviation;
    else if (o.tau_convention == "variance") priors.tau_scale_convention = TauScaleConvention::variance;
    else throw InvalidParameter("--tau-scale-convention must be 'sd' or 'variance'");
    priors.validate();
    SamplerConfig config = o.config;
    config.adapt = !o.no_adapt;
    config.validate();

    const PosteriorDraws draws = run_chains(dataset, graph, priors, config);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    io::write_params(dir / io::kParamsFile, draws);
    io::write_fitted(dir / io::kFittedFile, draws);
    io::write_diagnostics(dir / io::kDiagnosticsFile, draws);
    io::write_observed(dir / io::kObservedFile, dataset.region_ids(), dataset.z());

    manifest.inputs = {{"data", o.data, sha256_file(o.data)}, {"adjacency", o.adjacency, sha256_file(o.adjacency)}};
    manifest.priors = priors;
    manifest.config = config;
    manifest.scales = o.scales;
    manifest.sigma2_meas = sigma2;
    manifest.sampler_report = {{"rho_acceptance", draws.rho_acceptance},
                               {"tau_acceptance", draws.tau_acceptance},
                               {"rho_step", draws.rho_step},
                               {"log_tau_step", draws.log_tau_step},
                               {"retained_draws", draws.num_draws()},
                               {"rho_bounds", {graph.rho_bounds().lower, graph.rho_bounds().upper}}};
    manifest.finished_utc = utc_timestamp();
    write_manifest(dir / io::kManifestFile, manifest);

    out << "fit: " << dataset.n() << " regions, " << draws.num_draws() << " retained draws, acceptance rho "
        << std::setprecision(3) << draws.rho_acceptance << ", tau " << draws.tau_acceptance << "\n";
    for (const auto& s : draws.diagnostics)
        out << "  " << std::left << std::setw(8) << s.name << std::setprecision(6) << " mean " << s.mean << "  95% ("
            << s.q025 << ", " << s.q975 << ")  ess " << std::setprecision(4) << s.ess << "  split-rhat " << s.split_rhat
            << "\n";
    return kSuccess;
}

int cmd_predict(const PredictOptions& o, std::ostream& out) {
    LossSpec spec{parse_loss_family(o.loss), o.lambda, o.gamma};
    if (spec.family == LossFamily::squared_error) spec.lambda = 0.0;
    spec.validate();
    const PosteriorDraws draws = io::read_draws(o.draws_dir, chains_of(o.draws_dir));
    const PredictorTable table = predictor_table(draws, spec);
    const fs::path path =
        o.output.empty() ? output_dir(o.out_dir, o.draws_dir) / ("predict_" + lambda_tag(spec) + ".csv") : fs::path(o.output);
    io::write_predictor_table(path, table);
    out << "predict: " << spec.label() << " -> " << path.string() << "\n";
    return kSuccess;
}

int cmd_sweep(const SweepCmdOptions& o, std::ostream& out, std::ostream& err) {
    const LossFamily family = parse_loss_family(o.loss);
    if (family == LossFamily::squared_error) throw InvalidParameter("sweep needs --loss linex or pdl");
    const std::vector<double> grid = o.grid.empty() ? default_grid(family) : parse_grid(o.grid);
    const PosteriorDraws draws = io::read_draws(o.draws_dir, chains_of(o.draws_dir));
    const fs::path observed_path = o.observed.empty() ? fs::path(o.draws_dir) / io::kObservedFile : fs::path(o.observed);
    const Eigen::VectorXd observed = io::read_observed(observed_path, draws.region_ids);

    SweepOptions options;
    options.enforce_half_line = !o.any_sign;
    options.elbows.prominence = o.prominence;
    const PowerRatioCurve curve = sweep(draws, observed, family, grid, options);

    const fs::path path =
        o.output.empty() ? output_dir(o.out_dir, o.draws_dir) / ("sweep_" + to_string(family) + ".csv") : fs::path(o.output);
    io::write_curve(path, curve);
    fs::path warn_path = path;
    warn_path.replace_extension();
    warn_path += "_warnings.csv";
    io::write_sweep_warnings(warn_path, curve);
    for (const auto& w : curve.warnings) err << "warning: lambda " << w.lambda << " skipped: " << w.message << "\n";

    out << "sweep: " << curve.points.size() << " grid points -> " << path.string() << "\n";
    if (!curve.elbow_candidates.empty()) {
        out << "  elbow candidates (advisory): lambda";
        for (auto k : curve.elbow_candidates) out << ' ' << curve.lambda_grid[k];
        out << "\n";
    }
    return kSuccess;
}

int cmd_risk(const RiskOptions& o, std::ostream& out) {
    const PosteriorDraws draws = io::read_draws(o.draws_dir, chains_of(o.draws_dir));
    std::vector<LabeledPredictor> predictors;
    for (const auto& item : o.tables) {
        std::string label, path = item;
        if (const auto eq = item.find('='); eq != std::string::npos) {
            label = item.substr(0, eq);
            path = item.substr(eq + 1);
        }
        if (!fs::exists(path)) throw InputError("predictor table not found: " + path);
        const PredictorTable table = io::read_predictor_table(path);
        if (label.empty()) label = table.spec.label();
        LabeledPredictor lp{label, std::vector<double>(draws.region_ids.size())};
        if (table.rows.size() != draws.region_ids.size()) throw InputError(path + ": region count differs from the draws");
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            if (table.rows[i].region_id != draws.region_ids[i])
                throw InputError(path + ": region order differs from the draws at row " + std::to_string(i + 1));
            lp.values[i] = table.rows[i].predictor;
        }
        predictors.push_back(std::move(lp));
    }
    std::vector<LossSpec> losses;
    for (const auto& s : o.true_losses) losses.push_back(parse_loss_spec(s));

    const RiskMatrix matrix = risk_matrix(draws, predictors, losses);
    const fs::path prefix = o.output_prefix.empty() ? output_dir(o.out_dir, o.draws_dir) / "risk" : fs::path(o.output_prefix);
    io::write_risk_long(prefix.string() + "_rr.csv", matrix);
    io::write_risk_summary(prefix.string() + "_summary.csv", matrix);

    for (std::size_t t = 0; t < losses.size(); ++t) {
        out << "true loss " << losses[t].label() << ": IQR of relative risk\n";
        for (std::size_t p = 0; p < predictors.size(); ++p)
            out << "  " << std::left << std::setw(20) << predictors[p].label << std::setprecision(6) << matrix.iqr[t][p]
                << "\n";
    }
    for (const auto& row : summarize(matrix)) {
        out << "ranking under " << row.true_loss.label() << " (by IQR):";
        for (const auto& l : row.by_iqr) out << ' ' << l;
        out << "\n";
    }
    return kSuccess;
}

int cmd_report(const ReportOptions& o, std::ostream& out) {
    const fs::path dir(o.draws_dir);
    int chains = 1;
    if (fs::exists(dir / io::kManifestFile)) {
        const RunManifest manifest = read_manifest(dir / io::kManifestFile);
        if (!o.no_verify) verify_inputs(manifest);
        chains = manifest.config.chains;
        out << "engine " << manifest.engine_version << ", seed " << manifest.config.seed << ", " << manifest.config.total_iters
            << " iterations (" << manifest.config.burn_in << " burn-in, thin " << manifest.config.thin << ", "
            << manifest.config.chains << " chain(s))\n";
    }
    PosteriorDraws draws = io::read_draws(dir, chains);
    const fs::path path = output_dir(o.out_dir, o.draws_dir) / "param_summary.csv";
    io::write_diagnostics(path, draws);
    out << std::left << std::setw(10) << "parameter" << std::setw(14) << "mean" << std::setw(14) << "sd" << std::setw(14)
        << "q2.5" << std::setw(14) << "q97.5" << std::setw(10) << "ess"
        << "split_rhat\n";
    for (const auto& s : draws.diagnostics)
        out << std::setw(10) << s.name << std::setprecision(6) << std::setw(14) << s.mean << std::setw(14) << s.sd
            << std::setw(14) << s.q025 << std::setw(14) << s.q975 << std::setw(10) << std::setprecision(5) << s.ess
            << s.split_rhat << "\n";
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatial CAR prediction under symmetric and asymmetric loss"};
    app.require_subcommand(1);

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the CAR model by MCMC and write draw files");
    fit_cmd->add_option("--data", fit.data, "Data CSV: region_id,z,<covariates...>")->required();
    fit_cmd->add_option("--adjacency", fit.adjacency, "Edge-list CSV: region_a,region_b")->required();
    fit_cmd->add_option("--out-dir", fit.out_dir, "Output directory")->required();
    fit_cmd->add_option("--scale", fit.scales, "Divide a column by a factor, e.g. z=10000");
    fit_cmd->add_option("--sigma2-meas", fit.sigma2_meas, "Known measurement-error variance (enables latent process)");
    fit_cmd->add_option("--seed", fit.config.seed, "RNG seed");
    fit_cmd->add_option("--iters", fit.config.total_iters, "Total MCMC iterations");
    fit_cmd->add_option("--burn-in", fit.config.burn_in, "Burn-in iterations");
    fit_cmd->add_option("--thin", fit.config.thin, "Thinning interval");
    fit_cmd->add_option("--chains", fit.config.chains, "Number of chains");
    fit_cmd->add_option("--rho-step", fit.config.rho_step, "Initial random-walk scale for rho");
    fit_cmd->add_option("--log-tau-step", fit.config.log_tau_step, "Initial random-walk scale for log tau");
    fit_cmd->add_flag("--no-adapt", fit.no_adapt, "Keep proposal scales fixed during burn-in");
    fit_cmd->add_option("--sigma2-beta0", fit.priors.sigma2_beta0, "Intercept prior variance");
    fit_cmd->add_option("--sigma2-betaj", fit.priors.sigma2_betaj, "Slope prior variance");
    fit_cmd->add_option("--tau-df", fit.priors.tau_prior_df, "Half-t prior degrees of freedom");
    fit_cmd->add_option("--tau-scale", fit.priors.tau_prior_scale, "Half-t prior scale parameter");
    fit_cmd->add_option("--tau-scale-convention", fit.tau_convention, "sd: t scale = sqrt(tau-scale); variance: t scale = tau-scale");

    PredictOptions pred;
    auto* pred_cmd = app.add_subcommand("predict", "Optimal predictors under a loss");
    pred_cmd->add_option("--draws-dir", pred.draws_dir, "Fit output directory")->required();
    pred_cmd->add_option("--loss", pred.loss, "squared_error | linex | pdl")->required();
    pred_cmd->add_option("--lambda", pred.lambda, "Shape parameter");
    pred_cmd->add_option("--gamma", pred.gamma, "LINEX scale");
    pred_cmd->add_option("--out-dir", pred.out_dir, "Output directory (default: draws dir)");
    pred_cmd->add_option("--output", pred.output, "Output file");

    SweepCmdOptions sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Power ratio over a lambda grid");
    sweep_cmd->add_option("--draws-dir", sw.draws_dir, "Fit output directory")->required();
    sweep_cmd->add_option("--loss", sw.loss, "linex | pdl")->required();
    sweep_cmd->add_option("--grid", sw.grid, "min:max:step");
    sweep_cmd->add_option("--observed", sw.observed, "Observed values CSV (default: draws dir observed.csv)");
    sweep_cmd->add_option("--out-dir", sw.out_dir, "Output directory (default: draws dir)");
    sweep_cmd->add_option("--output", sw.output, "Output file");
    sweep_cmd->add_flag("--any-sign", sw.any_sign, "Allow lambda outside the underestimation-averse half-line");
    sweep_cmd->add_option("--prominence", sw.prominence, "Elbow threshold as a multiple of the median |second difference|");

    RiskOptions risk;
    auto* risk_cmd = app.add_subcommand("risk", "Relative risk of predictors under true losses");
    risk_cmd->add_option("--draws-dir", risk.draws_dir, "Fit output directory")->required();
    risk_cmd->add_option("--table", risk.tables, "Predictor table CSV, optionally label=path")->required();
    risk_cmd->add_option("--true-loss", risk.true_losses, "squared_error | linex:<lambda>[:<gamma>] | pdl:<lambda>")->required();
    risk_cmd->add_option("--out-dir", risk.out_dir, "Output directory (default: draws dir)");
    risk_cmd->add_option("--output-prefix", risk.output_prefix, "Writes <prefix>_rr.csv and <prefix>_summary.csv");

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "Parameter summaries and input verification");
    report_cmd->add_option("--draws-dir", report.draws_dir, "Fit output directory")->required();
    report_cmd->add_option("--out-dir", report.out_dir, "Output directory (default: draws dir)");
    report_cmd->add_flag("--no-verify", report.no_verify, "Skip input digest verification");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit, args, out);
        if (pred_cmd->parsed()) return cmd_predict(pred, out);
        if (sweep_cmd->parsed()) return cmd_sweep(sw, out, err);
        if (risk_cmd->parsed()) return cmd_risk(risk, out);
        if (report_cmd->parsed()) return cmd_report(report, out);
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << "\n";
        return kDomainError;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}

}  // namespace carloss::cli

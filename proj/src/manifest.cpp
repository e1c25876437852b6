#include "carloss/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "carloss/errors.hpp"

namespace carloss {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialization failed");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

namespace {

const char* to_string(TauScaleConvention c) {
    return c == TauScaleConvention::standard_deviation ? "standard_deviation" : "variance";
}

const char* to_string(TauPriorKind k) { return k == TauPriorKind::half_t ? "half_t" : "inverse_gamma"; }

}  // namespace

json to_json(const RunManifest& m) {
    json inputs = json::array();
    for (const auto& in : m.inputs) inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
    const auto& p = m.priors;
    const auto& c = m.config;
    json j = {
        {"engine_version", m.engine_version},
        {"inputs", inputs},
        {"priors",
         {{"sigma2_beta0", p.sigma2_beta0},
          {"sigma2_betaj", p.sigma2_betaj},
          {"tau_prior", to_string(p.tau_prior)},
          {"tau_prior_df", p.tau_prior_df},
          {"tau_prior_scale", p.tau_prior_scale},
          {"tau_scale_convention", to_string(p.tau_scale_convention)},
          {"ig_shape", p.ig_shape},
          {"ig_rate", p.ig_rate}}},
        {"sampler",
         {{"total_iters", c.total_iters},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"seed", c.seed},
          {"rho_step", c.rho_step},
          {"log_tau_step", c.log_tau_step},
          {"adapt", c.adapt},
          {"tau_floor", c.tau_floor},
          {"chains", c.chains}}},
        {"scales", m.scales},
        {"command_line", m.command_line},
        {"started_utc", m.started_utc},
        {"finished_utc", m.finished_utc},
        {"sampler_report", m.sampler_report},
    };
    j["sigma2_meas"] = m.sigma2_meas ? json(*m.sigma2_meas) : json(nullptr);
    return j;
}

RunManifest manifest_from_json(const json& j) {
    try {
        RunManifest m;
        m.engine_version = j.at("engine_version").get<std::string>();
        for (const auto& in : j.at("inputs"))
            m.inputs.push_back({in.at("role").get<std::string>(), in.at("path").get<std::string>(), in.at("sha256").get<std::string>()});
        const auto& p = j.at("priors");
        m.priors.sigma2_beta0 = p.at("sigma2_beta0").get<double>();
        m.priors.sigma2_betaj = p.at("sigma2_betaj").get<double>();
        m.priors.tau_prior = p.at("tau_prior").get<std::string>() == "half_t" ? TauPriorKind::half_t : TauPriorKind::inverse_gamma;
        m.priors.tau_prior_df = p.at("tau_prior_df").get<double>();
        m.priors.tau_prior_scale = p.at("tau_prior_scale").get<double>();
        m.priors.tau_scale_convention = p.at("tau_scale_convention").get<std::string>() == "variance"
                                            ? TauScaleConvention::variance
                                            : TauScaleConvention::standard_deviation;
        m.priors.ig_shape = p.at("ig_shape").get<double>();
        m.priors.ig_rate = p.at("ig_rate").get<double>();
        const auto& c = j.at("sampler");
        m.config.total_iters = c.at("total_iters").get<int>();
        m.config.burn_in = c.at("burn_in").get<int>();
        m.config.thin = c.at("thin").get<int>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.rho_step = c.at("rho_step").get<double>();
        m.config.log_tau_step = c.at("log_tau_step").get<double>();
        m.config.adapt = c.at("adapt").get<bool>();
        m.config.tau_floor = c.at("tau_floor").get<double>();
        m.config.chains = c.at("chains").get<int>();
        m.scales = j.at("scales").get<std::vector<std::string>>();
        if (!j.at("sigma2_meas").is_null()) m.sigma2_meas = j.at("sigma2_meas").get<double>();
        m.command_line = j.at("command_line").get<std::string>();
        m.started_utc = j.at("started_utc").get<std::string>();
        m.finished_utc = j.at("finished_utc").get<std::string>();
        m.sampler_report = j.value("sampler_report", json::object());
        return m;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << to_json(manifest).dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void verify_inputs(const RunManifest& manifest) {
    for (const auto& in : manifest.inputs) {
        if (sha256_file(in.path) != in.sha256) throw InputError("input changed since the run: " + in.path);
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace carloss

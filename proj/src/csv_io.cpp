#include "carloss/csv_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "carloss/errors.hpp"

namespace carloss::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void check_label(const std::string& id) {
    if (id.find_first_of(",\"\n\r") != std::string::npos)
        throw InputError("region id '" + id + "' contains a comma, quote or newline");
}

std::string where(const CsvTable& t, std::size_t row) {
    return t.path.string() + ":" + std::to_string(t.lines[row]);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return k;
    throw InputError(path.string() + ": missing column '" + name + "'");
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows[row][col];
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE || !std::isfinite(v))
        throw InputError(where(*this, row) + ": column '" + header[col] + "': bad number '" + cell + "'");
    return v;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    CsvTable t;
    t.path = path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        for (auto& c : cells) c = trim(c);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            std::ostringstream msg;
            msg << path.string() << ":" << lineno << ": expected " << t.header.size() << " fields, found " << cells.size();
            throw InputError(msg.str());
        }
        t.rows.push_back(std::move(cells));
        t.lines.push_back(lineno);
    }
    if (t.header.empty()) throw InputError(path.string() + ": empty file");
    return t;
}

void require_header(const CsvTable& table, const std::vector<std::string>& expected) {
    if (table.header != expected) {
        std::string want;
        for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
        throw InputError(table.path.string() + ":1: expected header '" + want + "'");
    }
}

ColumnScales parse_scales(const std::vector<std::string>& specs) {
    ColumnScales scales;
    for (const auto& s : specs) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidParameter("bad --scale '" + s + "' (expected column=factor)");
        const std::string value = s.substr(eq + 1);
        char* end = nullptr;
        const double factor = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size() || !(factor > 0.0) || !std::isfinite(factor))
            throw InvalidParameter("bad --scale factor in '" + s + "'");
        scales[s.substr(0, eq)] = factor;
    }
    return scales;
}

AreaDataset load_dataset(const fs::path& path, const ColumnScales& scales, std::optional<double> sigma2_meas) {
    const CsvTable t = read_csv(path);
    if (t.header.size() < 2 || t.header[0] != "region_id" || t.header[1] != "z")
        throw InputError(path.string() + ":1: header must start with 'region_id,z'");
    for (const auto& [name, factor] : scales) (void)t.column(name);

    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto p = static_cast<Eigen::Index>(t.header.size()) - 2;
    std::vector<std::string> ids;
    VectorXd z(n);
    MatrixXd x = MatrixXd::Ones(n, p + 1);
    std::set<std::string> seen;
    auto divisor = [&](const std::string& col) {
        auto it = scales.find(col);
        return it == scales.end() ? 1.0 : it->second;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        const std::string& id = t.rows[r][0];
        if (id.empty()) throw InputError(where(t, r) + ": empty region id");
        check_label(id);
        if (!seen.insert(id).second) throw InputError(where(t, r) + ": duplicate region id '" + id + "'");
        ids.push_back(id);
        z(i) = t.number(r, 1) / divisor("z");
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto c = static_cast<std::size_t>(j + 2);
            x(i, j + 1) = t.number(r, c) / divisor(t.header[c]);
        }
    }
    std::vector<std::string> names(t.header.begin() + 2, t.header.end());
    return AreaDataset(std::move(ids), std::move(z), std::move(x), sigma2_meas, std::move(names));
}

NeighborGraph load_adjacency(const fs::path& path, const std::vector<std::string>& region_ids) {
    const CsvTable t = read_csv(path);
    require_header(t, {"region_a", "region_b"});
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < region_ids.size(); ++i) index[region_ids[i]] = static_cast<int>(i);

    std::set<std::string> unknown;
    std::vector<NeighborGraph::Edge> edges;
    std::vector<bool> touched(region_ids.size(), false);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& a = t.rows[r][0];
        const auto& b = t.rows[r][1];
        auto ia = index.find(a), ib = index.find(b);
        if (ia == index.end()) unknown.insert(a);
        if (ib == index.end()) unknown.insert(b);
        if (ia == index.end() || ib == index.end()) continue;
        if (ia->second == ib->second) throw InputError(where(t, r) + ": self-loop on region '" + a + "'");
        edges.emplace_back(ia->second, ib->second);
        touched[static_cast<std::size_t>(ia->second)] = touched[static_cast<std::size_t>(ib->second)] = true;
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
        throw InputError(path.string() + ": adjacency references regions missing from the data: " + list);
    }
    std::string missing;
    for (std::size_t i = 0; i < region_ids.size(); ++i)
        if (!touched[i]) missing += (missing.empty() ? "" : ", ") + region_ids[i];
    if (!missing.empty()) throw InputError(path.string() + ": data regions without any adjacency entry: " + missing);
    return NeighborGraph::from_edges(static_cast<int>(region_ids.size()), edges);
}

void write_params(const fs::path& path, const PosteriorDraws& draws) {
    auto out = open_out(path);
    out << "draw";
    for (const auto& name : draws.param_names) out << ',' << name;
    out << '\n';
    for (std::size_t j = 0; j < draws.params.size(); ++j) {
        const auto& p = draws.params[j];
        out << j;
        for (Eigen::Index k = 0; k < p.beta.size(); ++k) out << ',' << format_double(p.beta(k));
        out << ',' << format_double(p.rho) << ',' << format_double(p.tau) << '\n';
    }
}

void write_fitted(const fs::path& path, const PosteriorDraws& draws) {
    auto out = open_out(path);
    out << "draw,region_id,fitted\n";
    for (Eigen::Index j = 0; j < draws.fitted.rows(); ++j)
        for (Eigen::Index i = 0; i < draws.fitted.cols(); ++i)
            out << j << ',' << draws.region_ids[static_cast<std::size_t>(i)] << ',' << format_double(draws.fitted(j, i))
                << '\n';
}

void write_diagnostics(const fs::path& path, const PosteriorDraws& draws) {
    auto out = open_out(path);
    out << "parameter,mean,sd,q025,q975,ess,split_rhat\n";
    for (const auto& s : draws.diagnostics)
        out << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ',' << format_double(s.q025)
            << ',' << format_double(s.q975) << ',' << format_double(s.ess) << ',' << format_double(s.split_rhat) << '\n';
}

void write_observed(const fs::path& path, const std::vector<std::string>& region_ids, const Eigen::VectorXd& z) {
    auto out = open_out(path);
    out << "region_id,z\n";
    for (std::size_t i = 0; i < region_ids.size(); ++i)
        out << region_ids[i] << ',' << format_double(z(static_cast<Eigen::Index>(i))) << '\n';
}

PosteriorDraws read_draws(const fs::path& dir, int num_chains) {
    PosteriorDraws d;
    d.num_chains = num_chains;

    const CsvTable fitted = read_csv(dir / kFittedFile);
    require_header(fitted, {"draw", "region_id", "fitted"});
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::vector<double>> columns;
    long current = -1;
    std::size_t filled = 0;
    std::vector<char> seen;
    for (std::size_t r = 0; r < fitted.rows.size(); ++r) {
        const double draw_value = fitted.number(r, 0);
        const auto draw = static_cast<long>(draw_value);
        if (static_cast<double>(draw) != draw_value || draw < 0)
            throw InputError(where(fitted, r) + ": draw index must be a nonnegative integer");
        const std::string& id = fitted.rows[r][1];
        const double v = fitted.number(r, 2);
        if (draw != current) {
            if (current >= 0 && filled != d.region_ids.size())
                throw InputError(where(fitted, r) + ": draw " + std::to_string(current) + " does not cover every region");
            if (draw != current + 1) throw InputError(where(fitted, r) + ": draws must be consecutive from 0");
            current = draw;
            filled = 0;
            seen.assign(d.region_ids.size(), 0);
        }
        auto it = index.find(id);
        if (it == index.end()) {
            if (current != 0) throw InputError(where(fitted, r) + ": region '" + id + "' absent from draw 0");
            it = index.emplace(id, d.region_ids.size()).first;
            d.region_ids.push_back(id);
            columns.emplace_back();
            seen.push_back(0);
        }
        if (seen[it->second]) throw InputError(where(fitted, r) + ": region '" + id + "' repeated within a draw");
        seen[it->second] = 1;
        columns[it->second].push_back(v);
        ++filled;
    }
    if (current < 0) throw InputError(fitted.path.string() + ": no draws");
    if (filled != d.region_ids.size()) throw InputError(fitted.path.string() + ": last draw does not cover every region");
    const auto m = static_cast<Eigen::Index>(current + 1);
    d.fitted.resize(m, static_cast<Eigen::Index>(d.region_ids.size()));
    for (std::size_t i = 0; i < columns.size(); ++i)
        for (Eigen::Index j = 0; j < m; ++j) d.fitted(j, static_cast<Eigen::Index>(i)) = columns[i][static_cast<std::size_t>(j)];

    const CsvTable params = read_csv(dir / kParamsFile);
    if (params.header.size() < 4 || params.header[0] != "draw" || params.header[params.header.size() - 2] != "rho" ||
        params.header.back() != "tau")
        throw InputError(params.path.string() + ":1: expected header 'draw,beta0..betap,rho,tau'");
    d.param_names.assign(params.header.begin() + 1, params.header.end());
    const std::size_t k = params.header.size() - 3;
    if (static_cast<Eigen::Index>(params.rows.size()) != m)
        throw InputError(params.path.string() + ": parameter draws do not match the fitted draws");
    for (std::size_t r = 0; r < params.rows.size(); ++r) {
        if (params.number(r, 0) != static_cast<double>(r)) throw InputError(where(params, r) + ": draws must be consecutive from 0");
        CarParams p;
        p.beta.resize(static_cast<Eigen::Index>(k));
        for (std::size_t c = 0; c < k; ++c) p.beta(static_cast<Eigen::Index>(c)) = params.number(r, c + 1);
        p.rho = params.number(r, k + 1);
        p.tau = params.number(r, k + 2);
        d.params.push_back(std::move(p));
    }
    if (num_chains < 1 || m % num_chains != 0) throw InputError("draw count is not divisible by the chain count");
    d.diagnostics = summarize_params(d);
    return d;
}

Eigen::VectorXd read_observed(const fs::path& path, const std::vector<std::string>& region_ids) {
    const CsvTable t = read_csv(path);
    if (t.header.size() < 2 || t.header[0] != "region_id" || t.header[1] != "z")
        throw InputError(path.string() + ":1: header must start with 'region_id,z'");
    std::unordered_map<std::string, double> values;
    for (std::size_t r = 0; r < t.rows.size(); ++r) values[t.rows[r][0]] = t.number(r, 1);
    Eigen::VectorXd z(static_cast<Eigen::Index>(region_ids.size()));
    for (std::size_t i = 0; i < region_ids.size(); ++i) {
        auto it = values.find(region_ids[i]);
        if (it == values.end()) throw InputError(path.string() + ": no observed value for region '" + region_ids[i] + "'");
        z(static_cast<Eigen::Index>(i)) = it->second;
    }
    return z;
}

void write_predictor_table(const fs::path& path, const PredictorTable& table) {
    auto out = open_out(path);
    out << "region_id,predictor,posterior_mean,sd,rmspe,matched_quantile,loss_family,lambda\n";
    const std::string family = to_string(table.spec.family);
    const std::string lambda = format_double(table.spec.family == LossFamily::squared_error ? 0.0 : table.spec.lambda);
    for (const auto& r : table.rows) {
        check_label(r.region_id);
        out << r.region_id << ',' << format_double(r.predictor) << ',' << format_double(r.posterior_mean) << ','
            << format_double(r.sd) << ',' << format_double(r.rmspe) << ',' << format_double(r.matched_quantile) << ','
            << family << ',' << lambda << '\n';
    }
}

PredictorTable read_predictor_table(const fs::path& path) {
    const CsvTable t = read_csv(path);
    require_header(t, {"region_id", "predictor", "posterior_mean", "sd", "rmspe", "matched_quantile", "loss_family", "lambda"});
    if (t.rows.empty()) throw InputError(path.string() + ": no rows");
    PredictorTable table;
    table.spec.family = parse_loss_family(t.rows[0][6]);
    table.spec.lambda = t.number(0, 7);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][6] != t.rows[0][6] || t.number(r, 7) != table.spec.lambda)
            throw InputError(where(t, r) + ": mixed loss specifications in one table");
        table.rows.push_back({t.rows[r][0], t.number(r, 1), t.number(r, 2), t.number(r, 3), t.number(r, 4), t.number(r, 5)});
    }
    return table;
}

void write_curve(const fs::path& path, const PowerRatioCurve& curve) {
    auto out = open_out(path);
    out << "lambda,psi,r_plus,r_minus,rmse_plus,rmse_minus,elbow_flag\n";
    for (std::size_t k = 0; k < curve.points.size(); ++k) {
        const auto& p = curve.points[k];
        out << format_double(curve.lambda_grid[k]) << ',' << format_double(p.psi) << ',' << format_double(p.r_plus) << ','
            << format_double(p.r_minus) << ',' << format_double(p.rmse_plus) << ',' << format_double(p.rmse_minus) << ','
            << (curve.elbow_flags[k] ? 1 : 0) << '\n';
    }
}

void write_sweep_warnings(const fs::path& path, const PowerRatioCurve& curve) {
    auto out = open_out(path);
    out << "lambda,message\n";
    for (const auto& w : curve.warnings) {
        std::string msg = w.message;
        for (auto& ch : msg)
            if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ' ';
        out << format_double(w.lambda) << ',' << msg << '\n';
    }
}

void write_risk_long(const fs::path& path, const RiskMatrix& m) {
    auto out = open_out(path);
    out << "true_loss,lambda,predictor,region_id,rr\n";
    for (std::size_t t = 0; t < m.true_losses.size(); ++t) {
        const auto& spec = m.true_losses[t];
        const std::string lambda = format_double(spec.family == LossFamily::squared_error ? 0.0 : spec.lambda);
        for (std::size_t p = 0; p < m.predictor_labels.size(); ++p)
            for (std::size_t i = 0; i < m.region_ids.size(); ++i)
                out << to_string(spec.family) << ',' << lambda << ',' << m.predictor_labels[p] << ',' << m.region_ids[i]
                    << ',' << format_double(m.rr[t][p][i]) << '\n';
    }
}

void write_risk_summary(const fs::path& path, const RiskMatrix& m) {
    auto out = open_out(path);
    out << "true_loss,lambda,predictor,iqr,median_rr\n";
    for (std::size_t t = 0; t < m.true_losses.size(); ++t) {
        const auto& spec = m.true_losses[t];
        const std::string lambda = format_double(spec.family == LossFamily::squared_error ? 0.0 : spec.lambda);
        for (std::size_t p = 0; p < m.predictor_labels.size(); ++p)
            out << to_string(spec.family) << ',' << lambda << ',' << m.predictor_labels[p] << ','
                << format_double(m.iqr[t][p]) << ',' << format_double(m.median_rr[t][p]) << '\n';
    }
}

}  // namespace carloss::io

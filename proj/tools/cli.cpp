#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <variant>

#include "pcweibull/divergence.hpp"
#include "pcweibull/inference.hpp"
#include "pcweibull/io.hpp"
#include "pcweibull/pc_prior.hpp"
#include "pcweibull/reference_priors.hpp"
#include "pcweibull/weibull.hpp"

namespace pcweibull::cli {
namespace {

constexpr int kConfigSchemaVersion = 1;
constexpr const char* kOutputDirEnv = "PCWEIBULL_OUTPUT_DIR";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Tabular output

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    int fixed_decimals = -1;  // >= 0: fixed notation instead of significant digits
};

struct OutputOptions {
    std::string format = "csv";
    int precision = kDefaultPrecision;
    std::string path;
};

std::string cell_text(const Cell& c, const Table& t, int precision) {
    if (const auto* s = std::get_if<std::string>(&c)) {
        return *s;
    }
    const double v = std::get<double>(c);
    if (t.fixed_decimals >= 0 && std::isfinite(v)) {
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, t.fixed_decimals);
        return std::string(buf, r.ptr);
    }
    return format_number(v, precision);
}

void write_table(std::ostream& os, const Table& t, const OutputOptions& o) {
    if (o.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& row : t.rows) {
            nlohmann::json obj;
            for (std::size_t i = 0; i < t.columns.size(); ++i) {
                if (const auto* s = std::get_if<std::string>(&row[i])) {
                    obj[t.columns[i]] = *s;
                } else {
                    const double v = std::get<double>(row[i]);
                    if (std::isfinite(v)) {
                        const std::string txt = cell_text(row[i], t, o.precision);
                        double parsed = 0.0;
                        std::from_chars(txt.data(), txt.data() + txt.size(), parsed);
                        obj[t.columns[i]] = parsed;
                    } else {
                        obj[t.columns[i]] = nullptr;
                    }
                }
            }
            arr.push_back(obj);
        }
        os << arr.dump(2) << '\n';
        return;
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        os << (i ? "," : "") << t.columns[i];
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << cell_text(row[i], t, o.precision);
        }
        os << '\n';
    }
}

std::ofstream open_file(const std::filesystem::path& p) {
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream f(p);
    if (!f) {
        throw InputError("cannot open '" + p.string() + "' for writing");
    }
    return f;
}

void emit(const Table& t, const OutputOptions& o, std::ostream& out) {
    if (o.path.empty() || o.path == "-") {
        write_table(out, t, o);
        return;
    }
    std::ofstream f = open_file(o.path);
    write_table(f, t, o);
}

// ---------------------------------------------------------------------------
// Argument helpers

// "lo:hi:n" -> n evenly spaced values
std::vector<double> parse_grid(const std::string& spec, const char* flag) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        parts.push_back(item);
    }
    if (parts.size() != 3) {
        throw UsageError(std::string(flag) + " expects lo:hi:n, got '" + spec + "'");
    }
    double lo = 0.0;
    double hi = 0.0;
    long n = 0;
    try {
        lo = detail::parse_double(parts[0], 0, 1);
        hi = detail::parse_double(parts[1], 0, 2);
        n = std::stol(parts[2]);
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + " expects lo:hi:n, got '" + spec + "'");
    }
    if (n < 1 || (n > 1 && !(hi > lo))) {
        throw UsageError(std::string(flag) + " needs n >= 1 and hi > lo");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            n == 1 ? lo : (i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
}

Interval parse_range(const std::string& spec) {
    const auto pos = spec.find(':');
    if (pos == std::string::npos) {
        throw UsageError("--alpha-range expects lo:hi, got '" + spec + "'");
    }
    try {
        return {detail::parse_double(spec.substr(0, pos), 0, 1),
                detail::parse_double(spec.substr(pos + 1), 0, 2)};
    } catch (const InputError&) {
        throw UsageError("--alpha-range expects lo:hi, got '" + spec + "'");
    }
}

void add_output_options(CLI::App* cmd, OutputOptions& o) {
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--precision", o.precision, "Significant digits")->check(CLI::Range(1, 17));
    cmd->add_option("--out", o.path, "Output file (default: standard output)");
}

struct PriorArgs {
    std::optional<double> theta;
    std::optional<double> tail_u;
    std::optional<double> tail_p;

    PcPriorSpec spec() const {
        const bool have_tail = tail_u.has_value() || tail_p.has_value();
        if (theta && have_tail) {
            throw UsageError("give either --theta or --U/--p, not both");
        }
        if (theta) {
            PcPriorSpec s{*theta};
            s.validate();
            return s;
        }
        if (tail_u && tail_p) {
            return theta_from_tail({*tail_u, *tail_p});
        }
        if (have_tail) {
            throw UsageError("--U and --p must be given together");
        }
        throw UsageError("one of --theta or --U/--p is required");
    }
};

void add_prior_options(CLI::App* cmd, PriorArgs& p) {
    cmd->add_option("--theta", p.theta, "PC prior rate on the distance scale");
    cmd->add_option("--U", p.tail_u, "Tail bound: P(d > U) = p");
    cmd->add_option("--p", p.tail_p, "Tail probability for --U");
}

// ---------------------------------------------------------------------------
// Config file: {"schema_version": 1, "<command>": {"flag": value, ...}} or the
// flags at top level. Flags on the command line win.

std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) {
        return args;
    }
    std::ifstream f(path);
    if (!f) {
        throw InputError("cannot read config file '" + path + "'");
    }
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config file '" + path + "': " + e.what());
    }
    if (!cfg.is_object() || !cfg.contains("schema_version") || cfg["schema_version"] != kConfigSchemaVersion) {
        throw InputError("config file '" + path + "': schema_version must be " +
                         std::to_string(kConfigSchemaVersion));
    }
    std::string command;
    for (const auto& a : args) {
        if (a == "prior" || a == "distance" || a == "tables" || a == "fit") {
            command = a;
            break;
        }
    }
    nlohmann::json flags = nlohmann::json::object();
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (it.key() != "schema_version" && !it.value().is_object()) {
            flags[it.key()] = it.value();
        }
    }
    if (cfg.contains(command) && cfg[command].is_object()) {
        flags.update(cfg[command]);
    }
    auto present = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    auto text = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_number_integer()) {
            return std::to_string(v.get<long long>());
        }
        if (v.is_number()) {
            return format_exact(v.get<double>());
        }
        throw InputError("config values must be strings, numbers, booleans or arrays of those");
    };
    std::vector<std::string> extra;
    for (auto it = flags.begin(); it != flags.end(); ++it) {
        const std::string flag = "--" + it.key();
        if (present(flag)) {
            continue;
        }
        const auto& v = it.value();
        if (v.is_boolean()) {
            if (v.get<bool>()) {
                extra.push_back(flag);
            }
        } else if (v.is_array()) {
            std::string joined;
            for (std::size_t i = 0; i < v.size(); ++i) {
                joined += (i ? "," : "") + text(v[i]);
            }
            extra.push_back(flag);
            extra.push_back(joined);
        } else {
            extra.push_back(flag);
            extra.push_back(text(v));
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

// ---------------------------------------------------------------------------
// Commands

struct PriorCommand {
    std::string action;
    PriorArgs prior;
    std::vector<double> alphas;
    std::string alpha_grid;
    std::vector<double> qs;
    std::optional<std::size_t> n;
    std::optional<std::uint64_t> seed;
    OutputOptions out;

    void attach(CLI::App* cmd) {
        cmd->add_option("action", action, "density | cdf | quantile | sample")
            ->required()
            ->check(CLI::IsMember({"density", "cdf", "quantile", "sample"}));
        add_prior_options(cmd, prior);
        cmd->add_option("--alpha", alphas, "Shape values")->delimiter(',');
        cmd->add_option("--alpha-grid", alpha_grid, "Shape grid lo:hi:n");
        cmd->add_option("--q", qs, "Probabilities for quantile")->delimiter(',');
        cmd->add_option("--n", n, "Number of draws");
        cmd->add_option("--seed", seed, "Random seed");
        add_output_options(cmd, out);
    }

    int run(std::ostream& os, std::ostream& err) {
        const PcPriorSpec spec = prior.spec();
        Table t;
        if (action == "density" || action == "cdf") {
            std::vector<double> xs = alphas;
            if (!alpha_grid.empty()) {
                const auto g = parse_grid(alpha_grid, "--alpha-grid");
                xs.insert(xs.end(), g.begin(), g.end());
            }
            if (xs.empty()) {
                throw UsageError("prior " + action + " needs --alpha or --alpha-grid");
            }
            t.columns = {"alpha", action};
            for (double a : xs) {
                t.rows.push_back({a, action == "density" ? density(a, spec) : cdf(a, spec)});
            }
        } else if (action == "quantile") {
            if (qs.empty()) {
                throw UsageError("prior quantile needs --q");
            }
            t.columns = {"q", "alpha"};
            for (double q : qs) {
                t.rows.push_back({q, quantile(q, spec)});
            }
        } else {
            if (!n || !seed) {
                throw UsageError("prior sample needs --n and --seed");
            }
            const PcSample s = sample(*n, spec, *seed);
            if (s.saturated_draws > 0) {
                err << "note: " << s.saturated_draws
                    << " draws fell beyond the representable shape range and were redrawn\n";
            }
            t.columns = {"alpha"};
            for (double a : s.alphas) {
                t.rows.push_back({a});
            }
        }
        emit(t, out, os);
        return kOk;
    }
};

struct DistanceCommand {
    std::string direction;
    std::vector<double> alphas;
    std::vector<double> ds;
    std::string branch;
    OutputOptions out;

    void attach(CLI::App* cmd) {
        cmd->add_option("direction", direction, "to-distance | to-alpha")
            ->required()
            ->check(CLI::IsMember({"to-distance", "to-alpha"}));
        cmd->add_option("--alpha", alphas, "Shape values")->delimiter(',');
        cmd->add_option("--d", ds, "Distance values")->delimiter(',');
        cmd->add_option("--branch", branch, "lower | upper")->check(CLI::IsMember({"lower", "upper"}));
        add_output_options(cmd, out);
    }

    int run(std::ostream& os, std::ostream&) {
        Table t;
        t.fixed_decimals = 6;
        if (direction == "to-distance") {
            if (alphas.empty()) {
                throw UsageError("distance to-distance needs --alpha");
            }
            t.columns = {"alpha", "distance", "branch"};
            for (double a : alphas) {
                const DistanceValue dv = distance(a);
                if (dv.saturated) {
                    throw SaturationError("alpha = " + format_number(a) + " lies below the shape floor " +
                                          format_number(kAlphaFloor) + "; its distance is not representable");
                }
                t.rows.push_back({a, dv.d, std::string(to_string(dv.branch))});
            }
        } else {
            if (ds.empty()) {
                throw UsageError("distance to-alpha needs --d");
            }
            if (branch.empty()) {
                throw UsageError("distance to-alpha needs --branch lower|upper");
            }
            const Branch b = branch == "lower" ? Branch::Lower : Branch::Upper;
            t.columns = {"distance", "alpha"};
            for (double d : ds) {
                t.rows.push_back({d, alpha_from_distance(d, b)});
            }
        }
        emit(t, out, os);
        return kOk;
    }
};

GammaConvention parse_convention(const std::string& s) {
    return s == "scale" ? GammaConvention::Scale : GammaConvention::Rate;
}

struct TablesCommand {
    double a = 1.5;
    std::string convention = "scale";
    std::vector<double> ds = {0.0, 0.1, 0.5, 0.8, 1.45};
    bool figure5 = false;
    std::string d_grid = "0:3:61";
    OutputOptions out;

    void attach(CLI::App* cmd) {
        cmd->add_option("--a", a, "Gamma prior parameter");
        cmd->add_option("--convention", convention, "rate | scale")->check(CLI::IsMember({"rate", "scale"}));
        cmd->add_option("--d", ds, "Distances")->delimiter(',');
        cmd->add_flag("--figure5", figure5, "Per-branch density of the gamma prior on the distance scale");
        cmd->add_option("--d-grid", d_grid, "Distance grid lo:hi:n for --figure5");
        add_output_options(cmd, out);
    }

    int run(std::ostream& os, std::ostream&) {
        const GammaPriorSpec spec{a, parse_convention(convention)};
        spec.validate();
        Table t;
        if (figure5) {
            const auto grid = parse_grid(d_grid, "--d-grid");
            t.columns = {"distance", "branch", "density"};
            for (Branch b : {Branch::Lower, Branch::Upper}) {
                for (const auto& p : prior_on_distance_scale(spec, b, grid)) {
                    t.rows.push_back({p.d, std::string(to_string(b)), p.density});
                }
            }
        } else {
            t.columns = {"distance", "alpha_lower", "dens_lower", "alpha_upper", "dens_upper"};
            for (const auto& r : distance_table(ds, spec)) {
                t.rows.push_back({r.d, r.alpha_lower, r.dens_lower, r.alpha_upper, r.dens_upper});
            }
        }
        emit(t, out, os);
        return kOk;
    }
};

struct FitCommand {
    // simulation
    bool simulate_only = false;
    double sim_alpha = 1.0;
    std::vector<double> sim_beta = {0.0};
    std::size_t sim_n = 200;
    double censor_rate = 0.0;
    // fitting
    std::string data_path;
    std::string prior_name = "pc";
    PriorArgs prior;
    double gamma_a = 1.0;
    std::string convention = "rate";
    std::vector<double> beta_sd = {kDefaultBetaSd};
    std::string engine = "grid";
    std::string alpha_range = "0.05:20";
    std::size_t grid_points = 400;
    std::size_t beta_grid_points = 200;
    std::size_t iters = 50000;
    std::size_t burn_in = 10000;
    std::uint64_t seed = 1;
    double level = 0.95;
    unsigned threads = 0;
    std::vector<double> sweep;
    std::string out_dir;
    OutputOptions out;

    void attach(CLI::App* cmd) {
        cmd->add_flag("--simulate", simulate_only, "Write a simulated dataset instead of fitting");
        cmd->add_option("--alpha", sim_alpha, "Simulation: true shape");
        cmd->add_option("--beta", sim_beta, "Simulation: coefficients, intercept first")->delimiter(',');
        cmd->add_option("--n", sim_n, "Simulation: number of subjects");
        cmd->add_option("--censor-rate", censor_rate, "Simulation: expected censored fraction");
        cmd->add_option("--data", data_path, "Dataset CSV (time,event,x1..xK)");
        cmd->add_option("--prior", prior_name, "pc | gamma | improper")
            ->check(CLI::IsMember({"pc", "gamma", "improper"}));
        add_prior_options(cmd, prior);
        cmd->add_option("--a", gamma_a, "Gamma prior parameter");
        cmd->add_option("--convention", convention, "rate | scale")->check(CLI::IsMember({"rate", "scale"}));
        cmd->add_option("--beta-sd", beta_sd, "Gaussian prior sd per coefficient")->delimiter(',');
        cmd->add_option("--engine", engine, "grid | mcmc | both")->check(CLI::IsMember({"grid", "mcmc", "both"}));
        cmd->add_option("--alpha-range", alpha_range, "Shape support lo:hi");
        cmd->add_option("--grid-points", grid_points, "Grid points on the shape axis");
        cmd->add_option("--beta-grid-points", beta_grid_points, "Grid points per coefficient");
        cmd->add_option("--iters", iters, "MCMC iterations");
        cmd->add_option("--burn-in", burn_in, "MCMC burn-in iterations");
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--level", level, "Credible level");
        cmd->add_option("--threads", threads, "Worker threads for the grid (0: all cores)");
        cmd->add_option("--sweep-theta", sweep, "PC prior sensitivity sweep over these theta")->delimiter(',');
        cmd->add_option("--out-dir", out_dir, std::string("Output directory (default: $") + kOutputDirEnv + " or .)");
        add_output_options(cmd, out);
    }

    PriorChoice prior_choice() const {
        PriorChoice pc;
        pc.beta_prior_sd = beta_sd;
        if (prior_name == "pc") {
            PriorArgs p = prior;
            if (!p.theta && !p.tail_u && !p.tail_p) {
                p.theta = kDefaultTheta;
            }
            pc.alpha_prior = p.spec();
        } else if (prior_name == "gamma") {
            pc.alpha_prior = GammaPriorSpec{gamma_a, parse_convention(convention)};
        } else {
            pc.alpha_prior = ImproperUniform{};
        }
        pc.validate();
        return pc;
    }

    FitConfig config() const {
        FitConfig c;
        c.engine = engine == "mcmc" ? Engine::Mcmc : (engine == "both" ? Engine::Both : Engine::Grid);
        c.alpha_range = parse_range(alpha_range);
        c.grid_points = grid_points;
        c.beta_grid_points = beta_grid_points;
        c.mcmc_iters = iters;
        c.burn_in = burn_in;
        c.seed = seed;
        c.credible_level = level;
        c.threads = threads;
        c.validate();
        return c;
    }

    std::filesystem::path output_dir() const {
        if (!out_dir.empty()) {
            return out_dir;
        }
        if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
            return env;
        }
        return ".";
    }

    int run_simulate(std::ostream& os) {
        Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sim_beta.data(),
                                                              static_cast<Eigen::Index>(sim_beta.size()));
        const SurvivalDataset d = simulate(sim_alpha, b, sim_n, censor_rate, seed);
        if (out.path.empty() || out.path == "-") {
            write_dataset_csv(os, d);
        } else {
            std::ofstream f = open_file(out.path);
            write_dataset_csv(f, d);
        }
        return kOk;
    }

    SurvivalDataset load() const {
        if (data_path.empty()) {
            throw UsageError("fit needs --data (or --simulate)");
        }
        std::ifstream f(data_path);
        if (!f) {
            throw InputError("cannot read dataset '" + data_path + "'");
        }
        try {
            return read_dataset_csv(f);
        } catch (const InputError& e) {
            throw InputError(data_path + ": " + e.what(), e.row(), e.column());
        }
    }

    void write_marginal(const std::filesystem::path& p, const PosteriorResult& r) const {
        std::ofstream f = open_file(p);
        write_marginal_csv(f, r.alpha_marginal, out.precision);
    }

    static Table summary_table() {
        Table t;
        t.columns = {"theta", "alpha_mode", "alpha_mean", "alpha_sd", "alpha_ci_lo", "alpha_ci_hi"};
        return t;
    }

    static std::vector<Cell> summary_row(double theta, const PosteriorResult& r) {
        return {theta, r.alpha_mode, r.alpha_mean, r.alpha_sd, r.alpha_ci.lo, r.alpha_ci.hi};
    }

    int run(std::ostream& os, std::ostream& err) {
        if (simulate_only) {
            return run_simulate(os);
        }
        const SurvivalDataset data = load();
        const FitConfig cfg = config();
        const std::filesystem::path dir = output_dir();
        std::filesystem::create_directories(dir);

        if (!sweep.empty()) {
            const auto entries = sensitivity_sweep(data, sweep, beta_sd, cfg);
            nlohmann::json all = nlohmann::json::array();
            Table t = summary_table();
            for (const auto& e : entries) {
                write_marginal(dir / ("marginal_theta_" + format_number(e.theta) + ".csv"), e.result);
                nlohmann::json j = posterior_to_json(e.result, describe(PcPriorSpec{e.theta}), out.precision);
                j["theta"] = e.theta;
                all.push_back(j);
                t.rows.push_back(summary_row(e.theta, e.result));
                for (const auto& w : e.result.diagnostics.warnings) {
                    err << "warning (theta=" << format_number(e.theta) << "): " << w << '\n';
                }
            }
            std::ofstream f = open_file(dir / "sweep.json");
            f << all.dump(2) << '\n';
            emit(t, out, os);
            return kOk;
        }

        const PriorChoice pc = prior_choice();
        const PosteriorResult r = fit(data, pc, cfg);
        const nlohmann::json j = posterior_to_json(r, describe(pc.alpha_prior), out.precision);
        write_marginal(dir / "marginal.csv", r);
        {
            std::ofstream f = open_file(dir / "posterior.json");
            f << j.dump(2) << '\n';
        }
        for (const auto& w : r.diagnostics.warnings) {
            err << "warning: " << w << '\n';
        }
        if (out.format == "json") {
            if (out.path.empty() || out.path == "-") {
                os << j.dump(2) << '\n';
            } else {
                std::ofstream f = open_file(out.path);
                f << j.dump(2) << '\n';
            }
        } else {
            Table t = summary_table();
            t.columns.erase(t.columns.begin());
            auto row = summary_row(0.0, r);
            row.erase(row.begin());
            t.rows.push_back(row);
            emit(t, out, os);
        }
        return kOk;
    }
};

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Penalised-complexity priors for the Weibull shape: prior evaluation, "
                 "distance conversions, reference tables and survival model fitting",
                 "pcweibull"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with flag values; flags given on the command line win");

    PriorCommand prior_cmd;
    DistanceCommand distance_cmd;
    TablesCommand tables_cmd;
    FitCommand fit_cmd;
    auto* prior_app = app.add_subcommand("prior", "Evaluate, invert or sample the PC prior on the shape");
    auto* distance_app = app.add_subcommand("distance", "Convert between shape and distance");
    auto* tables_app = app.add_subcommand("tables", "Gamma prior expressed on the distance scale");
    auto* fit_app = app.add_subcommand("fit", "Simulate data or fit the Weibull regression");
    prior_cmd.attach(prior_app);
    distance_cmd.attach(distance_app);
    tables_cmd.attach(tables_app);
    fit_cmd.attach(fit_app);
    for (auto* sub : {prior_app, distance_app, tables_app, fit_app}) {
        sub->add_option("--config", config_path, "JSON file with flag values");
    }

    try {
        std::vector<std::string> args = apply_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (prior_app->parsed()) {
            return prior_cmd.run(out, err);
        }
        if (distance_app->parsed()) {
            return distance_cmd.run(out, err);
        }
        if (tables_app->parsed()) {
            return tables_cmd.run(out, err);
        }
        return fit_cmd.run(out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DomainError& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kUsageError;
    } catch (const ShapeError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kUsageError;
    } catch (const SaturationError& e) {
        err << "saturated: " << e.what() << '\n';
        return kNumericFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kNumericFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumericFailure;
    }
}

}  // namespace pcweibull::cli

#pragma once

// CSV and JSON formats.
//
//   dataset   time,event,x1,...,xK   (event in {0, 1})
//   marginal  alpha,density
//   posterior JSON summaries
//
// Numbers are written with std::to_chars, so the decimal separator is always
// '.' regardless of the process locale.

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcweibull/errors.hpp"
#include "pcweibull/inference.hpp"
#include "pcweibull/weibull.hpp"

namespace pcweibull {

inline constexpr int kDefaultPrecision = 6;

/// x with `precision` significant digits, shortest general form.
inline std::string format_number(double x, int precision = kDefaultPrecision) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, precision);
    return std::string(buf, res.ptr);
}

/// Shortest representation that reads back to the same double.
inline std::string format_exact(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline double parse_double(std::string_view field, std::size_t row, std::size_t column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && field.front() == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != last) {
        throw InputError("row " + std::to_string(row) + ", column " + std::to_string(column) +
                             ": '" + std::string(field) + "' is not a number",
                         row, column);
    }
    return v;
}

// Reads lines, skipping blank ones; returns false at end of input.
inline bool next_line(std::istream& in, std::string& line, std::size_t& row) {
    while (std::getline(in, line)) {
        ++row;
        if (!trim(line).empty()) {
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Parses the dataset format. Rows and columns in errors are 1-based and the
/// header is row 1.
inline SurvivalDataset read_dataset_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    if (!detail::next_line(in, line, row)) {
        throw InputError("dataset: empty input", 0, 0);
    }
    const auto header = detail::split_fields(line);
    if (header.size() < 2 || header[0] != "time" || header[1] != "event") {
        throw InputError("dataset: header must start with 'time,event'", row, 1);
    }
    const std::size_t k = header.size() - 2;
    std::vector<double> times;
    std::vector<int> events;
    std::vector<double> cov;
    while (detail::next_line(in, line, row)) {
        const auto fields = detail::split_fields(line);
        if (fields.size() != header.size()) {
            throw InputError("row " + std::to_string(row) + ": expected " +
                                 std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             row, std::min(fields.size(), header.size()) + 1);
        }
        const double t = detail::parse_double(fields[0], row, 1);
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw InputError("row " + std::to_string(row) + ", column 1: time must be positive and finite",
                             row, 1);
        }
        if (fields[1] != "0" && fields[1] != "1") {
            throw InputError("row " + std::to_string(row) + ", column 2: event must be 0 or 1", row, 2);
        }
        times.push_back(t);
        events.push_back(fields[1] == "1" ? 1 : 0);
        for (std::size_t j = 0; j < k; ++j) {
            const double x = detail::parse_double(fields[2 + j], row, 3 + j);
            if (!std::isfinite(x)) {
                throw InputError("row " + std::to_string(row) + ", column " + std::to_string(3 + j) +
                                     ": covariate must be finite",
                                 row, 3 + j);
            }
            cov.push_back(x);
        }
    }
    if (times.empty()) {
        throw InputError("dataset: no data rows", row, 0);
    }
    SurvivalDataset d;
    d.times = std::move(times);
    d.events = std::move(events);
    d.covariates = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), static_cast<Eigen::Index>(d.times.size()), static_cast<Eigen::Index>(k));
    return d;
}

/// Writes the dataset format with exact round-trip numbers.
inline void write_dataset_csv(std::ostream& out, const SurvivalDataset& data) {
    data.validate();
    out << "time,event";
    for (Eigen::Index j = 0; j < data.num_covariates(); ++j) {
        out << ",x" << (j + 1);
    }
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << format_exact(data.times[i]) << ',' << data.events[i];
        for (Eigen::Index j = 0; j < data.num_covariates(); ++j) {
            out << ',' << format_exact(data.covariates(static_cast<Eigen::Index>(i), j));
        }
        out << '\n';
    }
}

inline void write_marginal_csv(std::ostream& out, const std::vector<MarginalPoint>& marginal,
                               int precision = kDefaultPrecision) {
    out << "alpha,density\n";
    for (const auto& p : marginal) {
        out << format_number(p.x, precision) << ',' << format_number(p.density, precision) << '\n';
    }
}

inline std::vector<MarginalPoint> read_marginal_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    if (!detail::next_line(in, line, row)) {
        throw InputError("marginal: empty input", 0, 0);
    }
    const auto header = detail::split_fields(line);
    if (header.size() != 2 || header[0] != "alpha" || header[1] != "density") {
        throw InputError("marginal: header must be 'alpha,density'", row, 1);
    }
    std::vector<MarginalPoint> out;
    while (detail::next_line(in, line, row)) {
        const auto f = detail::split_fields(line);
        if (f.size() != 2) {
            throw InputError("row " + std::to_string(row) + ": expected 2 fields", row,
                             std::min<std::size_t>(f.size(), 2) + 1);
        }
        out.push_back({detail::parse_double(f[0], row, 1), detail::parse_double(f[1], row, 2)});
    }
    return out;
}

/// Trapezoid integral of a tabulated density.
inline double trapezoid_mass(const std::vector<MarginalPoint>& m) {
    double s = 0.0;
    for (std::size_t i = 1; i < m.size(); ++i) {
        s += 0.5 * (m[i].density + m[i - 1].density) * (m[i].x - m[i - 1].x);
    }
    return s;
}

namespace detail {

inline nlohmann::json rounded(double x, int precision) {
    if (!std::isfinite(x)) {
        return nullptr;
    }
    const std::string s = format_number(x, precision);
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

inline nlohmann::json optional_json(const std::optional<double>& v, int precision) {
    return v ? rounded(*v, precision) : nlohmann::json(nullptr);
}

}  // namespace detail

inline constexpr int kPosteriorSchemaVersion = 1;

/// Summaries only; the marginal grid goes to CSV.
inline nlohmann::json posterior_to_json(const PosteriorResult& r, const std::string& prior_label,
                                        int precision = kDefaultPrecision) {
    using detail::rounded;
    nlohmann::json j;
    j["schema_version"] = kPosteriorSchemaVersion;
    j["engine"] = to_string(r.engine_used);
    j["prior"] = prior_label;
    j["credible_level"] = r.credible_level;
    j["alpha"] = {{"mode", rounded(r.alpha_mode, precision)},
                  {"mean", rounded(r.alpha_mean, precision)},
                  {"sd", rounded(r.alpha_sd, precision)},
                  {"ci", {rounded(r.alpha_ci.lo, precision), rounded(r.alpha_ci.hi, precision)}}};
    j["beta"] = nlohmann::json::array();
    for (const auto& b : r.beta) {
        j["beta"].push_back({{"mode", rounded(b.mode, precision)},
                             {"mean", rounded(b.mean, precision)},
                             {"sd", rounded(b.sd, precision)},
                             {"ci", {rounded(b.ci.lo, precision), rounded(b.ci.hi, precision)}}});
    }
    const Diagnostics& d = r.diagnostics;
    j["diagnostics"] = {{"acceptance_rate", detail::optional_json(d.acceptance_rate, precision)},
                        {"ess", detail::optional_json(d.ess, precision)},
                        {"proposal_scale", detail::optional_json(d.proposal_scale, precision)},
                        {"grid_mass_captured", detail::optional_json(d.grid_mass_captured, precision)},
                        {"mcmc_alpha_mean", detail::optional_json(d.mcmc_alpha_mean, precision)},
                        {"engine_gap", detail::optional_json(d.engine_gap, precision)},
                        {"draws", d.draws},
                        {"warnings", d.warnings}};
    return j;
}

}  // namespace pcweibull

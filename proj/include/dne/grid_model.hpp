#pragma once

// Typed test-system data: network, thermal units, renewables, loads and
// forecasts over a multi-period horizon, plus the DC shift-factor table.
//
// Conventions
//  * Units are MW, MWh, $ and minutes. Per-unit values appear only inside
//    compute_shift_factors().
//  * Line flow is positive in the from -> to direction.
//  * Buses, lines, generators and renewables are addressed by 0-based
//    position; Bus::id keeps the external (case-file) number.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dne {

struct CostCurve {
    enum class Kind { Linear, Quadratic, PiecewiseLinear };

    Kind kind = Kind::Quadratic;
    double c2 = 0.0;  // $/MWh^2
    double c1 = 0.0;  // $/MWh
    double c0 = 0.0;  // $/h
    std::vector<std::pair<double, double>> points;  // (MW, $/h), piecewise-linear only

    static CostCurve linear(double c1, double c0 = 0.0);
    static CostCurve quadratic(double c2, double c1, double c0 = 0.0);
    static CostCurve piecewise(std::vector<std::pair<double, double>> pts);

    /// Cost of running at `p` MW for one hour. Piecewise curves extrapolate
    /// their end segments.
    double evaluate(double p) const;
    /// Throws Error(Data) for a concave quadratic or non-monotone slopes.
    void validate(const std::string& where) const;

    bool operator==(const CostCurve&) const = default;
};

struct Bus {
    int id = 0;
    bool slack = false;
    double base_load = 0.0;  // MW, before the period profile
    bool operator==(const Bus&) const = default;
};

struct Line {
    int from = 0, to = 0;  // bus positions
    double reactance = 0.0;  // p.u.
    double capacity = 0.0;   // MW; +inf when the case leaves it unrated
    bool operator==(const Line&) const = default;
};

struct Generator {
    int bus = 0;
    double p_min = 0.0, p_max = 0.0;
    double ramp_up = 0.0, ramp_down = 0.0;  // MW/min
    CostCurve cost;
    bool agc = true;
    bool operator==(const Generator&) const = default;
};

struct Renewable {
    int bus = 0;
    double w_min = 0.0, w_max = 0.0;  // MW
    bool operator==(const Renewable&) const = default;
};

struct TimeGrid {
    int periods = 1;
    double dispatch_minutes = 60.0;  // Delta_d
    double response_minutes = 5.0;   // Delta_r
    bool operator==(const TimeGrid&) const = default;
};

/// Immutable-after-construction description of one test system.
struct GridCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Renewable> renewables;
    TimeGrid time;
    Eigen::MatrixXd load;      // N x T, MW
    Eigen::MatrixXd forecast;  // K x T, MW
    std::vector<double> initial_dispatch;  // size I, or empty for a free first period
    Eigen::MatrixXd shift_factors;         // N x L

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }
    int num_generators() const { return static_cast<int>(generators.size()); }
    int num_renewables() const { return static_cast<int>(renewables.size()); }
    int periods() const { return time.periods; }
    int slack_bus() const;
    /// Position of the bus with external id `id`; throws when absent.
    int bus_index(int id) const;
    double total_load(int t) const { return load.col(t).sum(); }

    /// Throws Error(Data) naming the offending field on any invariant violation.
    void validate() const;
};

bool structurally_equal(const GridCase& a, const GridCase& b, double tol = 0.0);

/// Parses the MATPOWER-style subset documented in docs/formats.md and returns
/// a validated case with shift factors attached.
GridCase parse_case(std::string_view text);
GridCase read_case_file(const std::filesystem::path& path);
std::string serialize_case(const GridCase& grid);

/// N x L DC shift factors; row of the slack bus is zero.
Eigen::MatrixXd compute_shift_factors(const GridCase& grid);

/// Delimited table: header row of column names, one row per period.
struct Series {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;  // rows = periods, cols = columns
    int periods() const { return static_cast<int>(values.rows()); }
};

Series load_series(std::string_view text);
Series read_series_file(const std::filesystem::path& path);
std::string format_series(const Series& series, int precision = 10);

/// Replaces forecasts (K columns, T rows).
void attach_forecast(GridCase& grid, const Series& series);
/// Replaces loads: one column per bus, headers matching bus ids.
void attach_load(GridCase& grid, const Series& series);
void scale_loads(GridCase& grid, double factor);
/// Sets r_up = r_dn = fraction * p_max for every generator.
void set_ramp_fraction(GridCase& grid, double fraction);

}  // namespace dne

#pragma once

#include "rangetrack/continuation.hpp"
#include "rangetrack/mpcc.hpp"
#include "rangetrack/range_costs.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rangetrack {

/// State-of-charge model for the 1D multirotor scenarios, in percent per
/// second. Discharge has a constant hover term plus input and velocity
/// losses; the charging variant replaces the constant term with a smooth
/// position-dependent blend that turns into a net charge near the base.
struct BatteryModel {
    double hover_drain = 0.085;
    double input_coeff = 0.283;     // loss (input_coeff * u)^2
    double velocity_coeff = 0.566;  // loss velocity_coeff * v^2
    bool charging = false;
    double charge_rate_scale = 0.05;
    double charge_shape_offset = 0.7;
    double base_position = -18.0;

    void check() const;
    // dE/dt. Position x matters only for the charging variant.
    double rate(double x, double u, double v, double* dx = nullptr,
                double* du = nullptr, double* dv = nullptr) const;
};

/// Kinematic fixed-wing with a parasitic-plus-induced power curve
/// P(V) = c1 V^3 + c2 / V and a conical camera footprint whose in-range
/// radius grows linearly with altitude.
struct FixedWingModel {
    double c1 = 0.002;
    double c2 = 300.0;
    double energy_scale = 100.0;  // dE/dt = -P(V) / energy_scale, percent SOC
    double speed_min = 8.0;
    double speed_max = 25.0;
    double climb_rate_max = 3.0;
    double turn_rate_max = 0.5;
    double accel_max = 2.0;
    double ceiling = 130.0;
    double footprint_radius_at_ceiling = 40.0;

    void check() const;
    double power(double v, double* dv = nullptr) const;
    // Airspeed minimizing P(V): (c2 / (3 c1))^{1/4}.
    double loiter_speed() const;
    double footprint_slope() const { return footprint_radius_at_ceiling / ceiling; }
    double footprint_radius(double z) const { return footprint_slope() * z; }
};

enum class Formulation { Setpoint, AirHard, AirSoft, Nair };

Formulation parse_formulation(const std::string& name);
const char* to_string(Formulation f);

struct AgentMetrics {
    double in_range_time = 0.0;
    double energy_used = 0.0;
    double final_soc = 0.0;
};

/// Exact-indicator evaluation of a solved trajectory. In-range time is the
/// trapezoidal measure of grid intervals: an interval counts fully when both
/// endpoints are in range, half when one is, not at all otherwise. Always
/// computed from the unsmoothed indicator, whatever smoothing produced the
/// trajectory.
struct Metrics {
    double duration = 0.0;
    double objective = 0.0;  // filled by the caller from the solve
    std::vector<AgentMetrics> agents;
    double any_agent_in_range_time = 0.0;
    double all_agents_in_range_time = 0.0;
};

struct ScenarioInfo {
    std::string name;
    int agent_count = 1;
    std::vector<std::string> state_names;
    std::vector<std::string> input_names;
    // Exact range residual for one agent: <= 0 iff the agent is in range.
    std::function<double(int agent, double t, const VectorXd& state)> range_residual;
    // Index of an agent's state-of-charge in the full state; -1 when absent.
    std::function<int(int agent)> energy_index;
};

Metrics compute_metrics(const Trajectory& traj, const ScenarioInfo& info);

/// Everything the pipeline needs to run one scenario: a problem family over
/// smoothing parameters (sharing one decision layout), the exact-evaluation
/// info, and a heuristic initial guess for the first stage.
struct ScenarioBundle {
    OcpFamily family;
    ScenarioInfo info;
    Layout layout;
    VectorXd initial_guess;
    std::vector<std::string> warnings;
};

/// Scenario parameters, normally populated from a config file.
struct ScenarioConfig {
    Formulation formulation = Formulation::Nair;
    RangeSpec range;
    SmoothingSchedule schedule;
    Mesh mesh;
    Horizon horizon = Horizon::fixed(0.0, 60.0);

    double setpoint_q = 1.0;
    double setpoint_r = 0.1;
    double effort_weight = 1e-4;
    double soft_weight = 1.0;
    double energy_reward_weight = 0.01;

    double initial_soc = 80.0;
    double energy_budget = 30.0;  // max SOC drop when enforce_energy_budget
    double soc_floor = 10.0;      // terminal SOC floor (multi-agent)
    bool enforce_energy_budget = true;

    BatteryModel battery;
    double start_position = 0.0;
    double position_limit = 60.0;
    double velocity_limit = 4.0;
    double input_limit = 10.0;

    int agent_count = 2;  // multi-agent builder
    MultiAgentMode aggregation = MultiAgentMode::Plain;
    bool use_mpcc = false;
    MpccOptions mpcc;

    FixedWingModel fixedwing;
    VectorXd fixedwing_start;  // size 6 override; empty selects the default
};

/// Single 1D vehicle with states (x, v, E), double-integrator position
/// dynamics scaled by 1/10 and the battery model. The energy budget enters
/// as a terminal SOC bound so formulations compare at fixed consumption.
ScenarioBundle build_1d_single(const ScenarioConfig& cfg);

/// N identical 1D vehicles starting and ending at the base position with a
/// terminal SOC floor. The team objective takes the best agent at each
/// instant (smooth-max aggregation, or the complementarity reformulation for
/// two agents when use_mpcc is set).
ScenarioBundle build_1d_multi(const ScenarioConfig& cfg);

/// Fixed-wing tracker with states (x, y, z, psi, V, E) over a 2D ground
/// target; in-range means the target lies inside the altitude-dependent
/// camera footprint.
ScenarioBundle build_3d_fixedwing(const ScenarioConfig& cfg);

}  // namespace rangetrack

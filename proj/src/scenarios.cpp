#include "rangetrack/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace rangetrack {

void BatteryModel::check() const {
    if (hover_drain < 0.0 || input_coeff < 0.0 || velocity_coeff < 0.0)
        throw validation_error("battery", "loss coefficients must be >= 0");
    if (charge_rate_scale < 0.0)
        throw validation_error("battery.charge_rate_scale", "must be >= 0");
    if (!std::isfinite(base_position))
        throw validation_error("battery.base_position", "must be finite");
}

double BatteryModel::rate(double x, double u, double v, double* dx, double* du,
                          double* dv) const {
    const double iu = input_coeff * u;
    double r = -iu * input_coeff - 0.0;  // placeholder, rewritten below
    r = -(iu * iu) - velocity_coeff * v * v;
    if (du) *du = -2.0 * input_coeff * iu;
    if (dv) *dv = -2.0 * velocity_coeff * v;
    if (charging) {
        const double th = std::tanh(x - base_position);
        r -= charge_rate_scale * (charge_shape_offset + th);
        if (dx) *dx = -charge_rate_scale * (1.0 - th * th);
    } else {
        r -= hover_drain;
        if (dx) *dx = 0.0;
    }
    return r;
}

void FixedWingModel::check() const {
    if (!(c1 > 0.0) || !(c2 > 0.0))
        throw validation_error("fixedwing.power", "c1 and c2 must be > 0");
    if (!(energy_scale > 0.0))
        throw validation_error("fixedwing.energy_scale", "must be > 0");
    if (!(speed_min > 0.0) || !(speed_max > speed_min))
        throw validation_error("fixedwing.speed", "need 0 < speed_min < speed_max");
    if (!(climb_rate_max > 0.0) || !(turn_rate_max > 0.0) || !(accel_max > 0.0))
        throw validation_error("fixedwing.inputs", "rate bounds must be > 0");
    if (!(ceiling > 0.0)) throw validation_error("fixedwing.ceiling", "must be > 0");
    if (!(footprint_radius_at_ceiling > 0.0))
        throw validation_error("fixedwing.footprint", "must be > 0");
}

double FixedWingModel::power(double v, double* dv) const {
    if (dv) *dv = 3.0 * c1 * v * v - c2 / (v * v);
    return c1 * v * v * v + c2 / v;
}

double FixedWingModel::loiter_speed() const {
    return std::pow(c2 / (3.0 * c1), 0.25);
}

Formulation parse_formulation(const std::string& name) {
    if (name == "setpoint") return Formulation::Setpoint;
    if (name == "air_hard") return Formulation::AirHard;
    if (name == "air_soft") return Formulation::AirSoft;
    if (name == "nair") return Formulation::Nair;
    throw validation_error("formulation",
                           "unknown value '" + name +
                               "' (expected setpoint, air_hard, air_soft or nair)");
}

const char* to_string(Formulation f) {
    switch (f) {
        case Formulation::Setpoint: return "setpoint";
        case Formulation::AirHard: return "air_hard";
        case Formulation::AirSoft: return "air_soft";
        case Formulation::Nair: return "nair";
    }
    return "unknown";
}

Metrics compute_metrics(const Trajectory& traj, const ScenarioInfo& info) {
    traj.check();
    if (info.agent_count < 1)
        throw validation_error("metrics.agent_count", "must be >= 1");
    const auto P = traj.times.size();
    const int N = info.agent_count;

    Metrics met;
    met.duration = traj.times[P - 1] - traj.times[0];
    std::vector<std::vector<char>> in(N, std::vector<char>(P));
    VectorXd row;
    for (int a = 0; a < N; ++a)
        for (Eigen::Index k = 0; k < P; ++k) {
            row = traj.states.row(k);
            in[a][k] = info.range_residual(a, traj.times[k], row) <= 0.0 ? 1 : 0;
        }

    auto interval_measure = [&](const std::function<bool(Eigen::Index)>& flag) {
        double total = 0.0;
        for (Eigen::Index k = 0; k + 1 < P; ++k) {
            const double h = traj.times[k + 1] - traj.times[k];
            const int count = (flag(k) ? 1 : 0) + (flag(k + 1) ? 1 : 0);
            total += 0.5 * h * count;
        }
        return total;
    };

    met.agents.resize(N);
    for (int a = 0; a < N; ++a) {
        met.agents[a].in_range_time =
            interval_measure([&](Eigen::Index k) { return in[a][k] != 0; });
        const int ei = info.energy_index ? info.energy_index(a) : -1;
        if (ei >= 0) {
            met.agents[a].energy_used = traj.states(0, ei) - traj.states(P - 1, ei);
            met.agents[a].final_soc = traj.states(P - 1, ei);
        }
    }
    met.any_agent_in_range_time = interval_measure([&](Eigen::Index k) {
        for (int a = 0; a < N; ++a)
            if (in[a][k]) return true;
        return false;
    });
    met.all_agents_in_range_time = interval_measure([&](Eigen::Index k) {
        for (int a = 0; a < N; ++a)
            if (!in[a][k]) return false;
        return true;
    });
    return met;
}

namespace {

StageFn effort_term(double weight) {
    return [weight](const VectorXd&, const VectorXd& u, const VectorXd&, double,
                    StageGrad* g) {
        if (g) g->u = 2.0 * weight * u;
        return weight * u.squaredNorm();
    };
}

double guess_tf(const Horizon& horizon) {
    return horizon.free_tf ? 0.5 * (horizon.tf_lower + horizon.tf_upper) : horizon.tf;
}

// Smooth 0..1 duty profile: ramps over `ramp` seconds into and out of the
// window [start, end].
double duty(double t, double start, double end, double ramp) {
    if (t <= start - ramp || t >= end + ramp) return 0.0;
    if (t < start) return (t - (start - ramp)) / ramp;
    if (t > end) return ((end + ramp) - t) / ramp;
    return 1.0;
}

// Builds velocity, input and SOC profiles consistent with a 1D position
// profile: v by central differences, u from acceleration, E by Euler
// integration of the battery model.
void fill_1d_agent(const std::vector<double>& times, const std::vector<double>& pos,
                   const BatteryModel& battery, double initial_soc, double vel_limit,
                   double input_limit, MatrixXd& states, MatrixXd& inputs, int state_col,
                   int input_col) {
    const int P = static_cast<int>(times.size());
    std::vector<double> vel(P);
    for (int k = 0; k < P; ++k) {
        const int k0 = std::max(0, k - 1);
        const int k1 = std::min(P - 1, k + 1);
        const double v = (pos[k1] - pos[k0]) / (times[k1] - times[k0]);
        vel[k] = std::clamp(v, -vel_limit, vel_limit);
    }
    double soc = initial_soc;
    for (int k = 0; k < P; ++k) {
        const int k0 = std::max(0, k - 1);
        const int k1 = std::min(P - 1, k + 1);
        const double acc = (vel[k1] - vel[k0]) / (times[k1] - times[k0]);
        const double u = std::clamp(10.0 * acc, -input_limit, input_limit);
        states(k, state_col) = pos[k];
        states(k, state_col + 1) = vel[k];
        states(k, state_col + 2) = soc;
        inputs(k, input_col) = u;
        if (k + 1 < P)
            soc = std::clamp(
                soc + (times[k + 1] - times[k]) * battery.rate(pos[k], u, vel[k]), 0.0,
                100.0);
    }
}

StageFn make_1d_tracking_term(Formulation f, const RangeSpec& range,
                              const SmoothingParams& params, double setpoint_q,
                              double setpoint_r, double soft_weight) {
    const ReferenceSignal ref = range.reference;
    switch (f) {
        case Formulation::Setpoint:
            return [ref, setpoint_q, setpoint_r](const VectorXd& x, const VectorXd& u,
                                                 const VectorXd&, double t, StageGrad* g) {
                const double e = x[0] - ref.value(t)[0];
                if (g) {
                    g->x[0] = 2.0 * setpoint_q * e;
                    g->u[0] = 2.0 * setpoint_r * u[0];
                    g->t = -2.0 * setpoint_q * e * ref.rate(t)[0];
                }
                return setpoint_q * e * e + setpoint_r * u[0] * u[0];
            };
        case Formulation::Nair:
            return [range, params, ref](const VectorXd& x, const VectorXd&,
                                        const VectorXd&, double t, StageGrad* g) {
                VectorXd pos(1);
                pos[0] = x[0];
                VectorXd dx;
                const double v =
                    nair_stage_cost(pos, ref.value(t), range, params, g ? &dx : nullptr);
                if (g) {
                    g->x[0] = dx[0];
                    g->t = -dx[0] * ref.rate(t)[0];
                }
                return v;
            };
        case Formulation::AirSoft:
            return [range, params, ref, soft_weight](const VectorXd& x, const VectorXd&,
                                                     const VectorXd&, double t,
                                                     StageGrad* g) {
                VectorXd pos(1);
                pos[0] = x[0];
                VectorXd dres;
                const double res = air_constraint_residual(pos, ref.value(t), range,
                                                           g ? &dres : nullptr);
                VectorXd sw;
                const double hinge =
                    smooth_max(Eigen::Vector2d(res, 0.0), params.rho, g ? &sw : nullptr);
                if (g) {
                    g->x[0] = soft_weight * sw[0] * dres[0];
                    g->t = -soft_weight * sw[0] * dres[0] * ref.rate(t)[0];
                }
                return soft_weight * hinge;
            };
        case Formulation::AirHard:
            throw validation_error("formulation", "air_hard has no tracking stage cost");
    }
    throw validation_error("formulation", "unknown formulation");
}

}  // namespace

ScenarioBundle build_1d_single(const ScenarioConfig& cfg) {
    cfg.schedule.check();
    cfg.battery.check();
    cfg.mesh.check();
    RangeSpec range = cfg.range;
    ScenarioBundle bundle;
    range.check(&bundle.warnings);
    if (range.dim != 1)
        throw validation_error("range.dim", "single_1d tracks a scalar; need dim 1");
    if (!(cfg.velocity_limit > 0.0) || !(cfg.input_limit > 0.0) ||
        !(cfg.position_limit > 0.0))
        throw validation_error("scenario.limits", "limits must be > 0");
    if (!(cfg.initial_soc > 0.0) || cfg.initial_soc > 100.0)
        throw validation_error("energy.initial", "must lie in (0, 100]");

    const Formulation f = cfg.formulation;
    auto make_ocp = [cfg, range, f](const SmoothingParams& params) {
        OcpSpec ocp;
        ocp.state_dim = 3;
        ocp.input_dim = 1;
        ocp.param_dim = 0;
        ocp.agent_count = 1;
        const BatteryModel battery = cfg.battery;
        ocp.dynamics = [battery](const VectorXd& x, const VectorXd& u, const VectorXd&,
                                 double, DynamicsJac* jac) {
            VectorXd fdot(3);
            fdot[0] = x[1];
            fdot[1] = u[0] / 10.0;
            double dEx = 0.0, dEu = 0.0, dEv = 0.0;
            fdot[2] = battery.rate(x[0], u[0], x[1], jac ? &dEx : nullptr,
                                   jac ? &dEu : nullptr, jac ? &dEv : nullptr);
            if (jac) {
                jac->x(0, 1) = 1.0;
                jac->u(1, 0) = 0.1;
                jac->x(2, 0) = dEx;
                jac->x(2, 1) = dEv;
                jac->u(2, 0) = dEu;
            }
            return fdot;
        };
        if (cfg.effort_weight > 0.0)
            ocp.lagrange_terms.push_back(effort_term(cfg.effort_weight));
        if (f == Formulation::AirHard) {
            const ReferenceSignal ref = range.reference;
            const RangeSpec r2 = range;
            ocp.path_constraints.push_back([r2, ref](const VectorXd& x, const VectorXd&,
                                                     const VectorXd&, double t,
                                                     StageGrad* g) {
                VectorXd pos(1);
                pos[0] = x[0];
                VectorXd dres;
                const double res =
                    air_constraint_residual(pos, ref.value(t), r2, g ? &dres : nullptr);
                if (g) {
                    g->x[0] = dres[0];
                    g->t = -dres[0] * ref.rate(t)[0];
                }
                return res;
            });
        } else {
            ocp.lagrange_terms.push_back(make_1d_tracking_term(
                f, range, params, cfg.setpoint_q, cfg.setpoint_r, cfg.soft_weight));
        }
        ocp.state_bounds = Bounds::box(
            (VectorXd(3) << -cfg.position_limit, -cfg.velocity_limit, 0.0).finished(),
            (VectorXd(3) << cfg.position_limit, cfg.velocity_limit, 100.0).finished());
        ocp.input_bounds =
            Bounds::box(VectorXd::Constant(1, -cfg.input_limit),
                        VectorXd::Constant(1, cfg.input_limit));
        ocp.param_bounds = Bounds::unbounded(0);
        VectorXd x0(3);
        x0 << cfg.start_position, 0.0, cfg.initial_soc;
        ocp.initial_state_bounds = Bounds::fixed(x0);
        if (cfg.enforce_energy_budget) {
            Bounds fb = ocp.state_bounds;
            fb.lower[2] = std::max(0.0, cfg.initial_soc - cfg.energy_budget);
            ocp.final_state_bounds = fb;
        }
        ocp.horizon = cfg.horizon;
        return ocp;
    };

    const Mesh mesh = cfg.mesh;
    bundle.family = [make_ocp, mesh](const SmoothingParams& params) {
        return transcribe(make_ocp(params), mesh);
    };
    bundle.layout = bundle.family(cfg.schedule.stages.front()).layout;

    bundle.info.name = "single_1d";
    bundle.info.agent_count = 1;
    bundle.info.state_names = {"x", "v", "E"};
    bundle.info.input_names = {"u"};
    {
        const ReferenceSignal ref = range.reference;
        const double delta = range.delta;
        bundle.info.range_residual = [ref, delta](int, double t, const VectorXd& x) {
            const double e = x[0] - ref.value(t)[0];
            return e * e - delta * delta;
        };
        bundle.info.energy_index = [](int) { return 2; };
    }

    {
        const int P = bundle.layout.points();
        const double t0 = cfg.horizon.t0;
        const double tf = guess_tf(cfg.horizon);
        const double h = (tf - t0) / bundle.layout.intervals;
        std::vector<double> times(P), pos(P);
        const double ramp = 0.15 * (tf - t0);
        for (int k = 0; k < P; ++k) {
            times[k] = t0 + h * k;
            const double xr = std::clamp(range.reference.value(times[k])[0],
                                         -cfg.position_limit, cfg.position_limit);
            const double s = std::min(1.0, (times[k] - t0) / ramp);
            pos[k] = cfg.start_position + s * (xr - cfg.start_position);
        }
        Trajectory traj;
        traj.times = Eigen::Map<const VectorXd>(times.data(), P);
        traj.states.resize(P, 3);
        traj.inputs.resize(P, 1);
        traj.params.resize(0);
        fill_1d_agent(times, pos, cfg.battery, cfg.initial_soc, cfg.velocity_limit,
                      cfg.input_limit, traj.states, traj.inputs, 0, 0);
        bundle.initial_guess = bundle.layout.encode(traj);
    }
    return bundle;
}

ScenarioBundle build_1d_multi(const ScenarioConfig& cfg) {
    cfg.schedule.check();
    cfg.battery.check();
    cfg.mesh.check();
    RangeSpec range = cfg.range;
    ScenarioBundle bundle;
    range.check(&bundle.warnings);
    if (range.dim != 1)
        throw validation_error("range.dim", "multi_1d tracks a scalar; need dim 1");
    const int N = cfg.agent_count;
    if (N < 2) throw validation_error("agent_count", "multi_1d needs at least 2 agents");
    if (cfg.use_mpcc && N != 2)
        throw validation_error("multi_agent_mode",
                               "the complementarity formulation covers exactly 2 agents");
    if (cfg.use_mpcc && cfg.formulation != Formulation::Nair)
        throw validation_error("multi_agent_mode",
                               "the complementarity formulation replaces the n.a.i.r "
                               "team cost; use formulation=nair");
    if (cfg.aggregation == MultiAgentMode::Clipped && !(range.alpha < 0.0 && range.beta == 0.0))
        throw validation_error("range.alpha",
                               "clipped aggregation requires alpha < 0 and beta = 0");
    if (cfg.horizon.free_tf)
        throw validation_error("horizon", "multi_1d uses a fixed horizon");

    const Formulation f = cfg.formulation;
    const ReferenceSignal ref = range.reference;

    auto agent_cost = [range, ref](int a, const SmoothingParams& params) -> StageFn {
        return [a, range, ref, params](const VectorXd& x, const VectorXd&,
                                       const VectorXd&, double t, StageGrad* g) {
            VectorXd pos(1);
            pos[0] = x[3 * a];
            VectorXd dx;
            const double v =
                nair_stage_cost(pos, ref.value(t), range, params, g ? &dx : nullptr);
            if (g) {
                g->x[3 * a] = dx[0];
                g->t = -dx[0] * ref.rate(t)[0];
            }
            return v;
        };
    };

    auto make_ocp = [cfg, range, ref, f, N, agent_cost](const SmoothingParams& params,
                                                        bool include_team_cost) {
        OcpSpec ocp;
        ocp.state_dim = 3 * N;
        ocp.input_dim = N;
        ocp.param_dim = 0;
        ocp.agent_count = N;
        const BatteryModel battery = cfg.battery;
        ocp.dynamics = [battery, N](const VectorXd& x, const VectorXd& u, const VectorXd&,
                                    double, DynamicsJac* jac) {
            VectorXd fdot(3 * N);
            for (int a = 0; a < N; ++a) {
                const int s = 3 * a;
                fdot[s] = x[s + 1];
                fdot[s + 1] = u[a] / 10.0;
                double dEx = 0.0, dEu = 0.0, dEv = 0.0;
                fdot[s + 2] = battery.rate(x[s], u[a], x[s + 1], jac ? &dEx : nullptr,
                                           jac ? &dEu : nullptr, jac ? &dEv : nullptr);
                if (jac) {
                    jac->x(s, s + 1) = 1.0;
                    jac->u(s + 1, a) = 0.1;
                    jac->x(s + 2, s) = dEx;
                    jac->x(s + 2, s + 1) = dEv;
                    jac->u(s + 2, a) = dEu;
                }
            }
            return fdot;
        };
        if (cfg.effort_weight > 0.0)
            ocp.lagrange_terms.push_back(effort_term(cfg.effort_weight));

        if (include_team_cost) {
            switch (f) {
                case Formulation::Nair: {
                    const MultiAgentMode mode = cfg.aggregation;
                    ocp.lagrange_terms.push_back(
                        [range, ref, params, N, mode, agent_cost](
                            const VectorXd& x, const VectorXd& u, const VectorXd& p,
                            double t, StageGrad* g) {
                            VectorXd l(N);
                            std::vector<double> dl(N, 0.0);
                            StageGrad ga;
                            for (int a = 0; a < N; ++a) {
                                if (g) reset_grad(ga, static_cast<int>(x.size()),
                                                  static_cast<int>(u.size()),
                                                  static_cast<int>(p.size()));
                                l[a] = agent_cost(a, params)(x, u, p, t, g ? &ga : nullptr);
                                if (g) dl[a] = ga.x[3 * a];
                            }
                            VectorXd dcosts;
                            const double v = multi_agent_nair_cost(
                                l, range, params, mode, g ? &dcosts : nullptr);
                            if (g) {
                                const double rate = ref.rate(t)[0];
                                double dt_total = 0.0;
                                for (int a = 0; a < N; ++a) {
                                    g->x[3 * a] = dcosts[a] * dl[a];
                                    dt_total += dcosts[a] * dl[a] * (-rate);
                                }
                                g->t = dt_total;
                            }
                            return v;
                        });
                    break;
                }
                case Formulation::Setpoint: {
                    const double q = cfg.setpoint_q, r = cfg.setpoint_r;
                    ocp.lagrange_terms.push_back([ref, q, r, N](const VectorXd& x,
                                                                const VectorXd& u,
                                                                const VectorXd&, double t,
                                                                StageGrad* g) {
                        const double xr = ref.value(t)[0];
                        double v = 0.0;
                        double dt_total = 0.0;
                        const double rate = g ? ref.rate(t)[0] : 0.0;
                        for (int a = 0; a < N; ++a) {
                            const double e = x[3 * a] - xr;
                            v += q * e * e + r * u[a] * u[a];
                            if (g) {
                                g->x[3 * a] = 2.0 * q * e;
                                g->u[a] = 2.0 * r * u[a];
                                dt_total += -2.0 * q * e * rate;
                            }
                        }
                        if (g) g->t = dt_total;
                        return v;
                    });
                    break;
                }
                case Formulation::AirSoft:
                case Formulation::AirHard: {
                    auto team_residual = [range, ref, N](const VectorXd& x, double t,
                                                         double rho,
                                                         VectorXd* dx_full, double* dt) {
                        std::vector<VectorXd> xs(N);
                        for (int a = 0; a < N; ++a) {
                            xs[a].resize(1);
                            xs[a][0] = x[3 * a];
                        }
                        std::vector<VectorXd> dxs;
                        const double res = multi_air_constraint_residual(
                            xs, ref.value(t), range, rho, dx_full ? &dxs : nullptr);
                        if (dx_full) {
                            dx_full->setZero(x.size());
                            const double rate = ref.rate(t)[0];
                            double dt_total = 0.0;
                            for (int a = 0; a < N; ++a) {
                                (*dx_full)[3 * a] = dxs[a][0];
                                dt_total += dxs[a][0] * (-rate);
                            }
                            if (dt) *dt = dt_total;
                        }
                        return res;
                    };
                    if (f == Formulation::AirHard) {
                        const double rho = params.rho;
                        ocp.path_constraints.push_back(
                            [team_residual, rho](const VectorXd& x, const VectorXd&,
                                                 const VectorXd&, double t, StageGrad* g) {
                                VectorXd dx;
                                double dt = 0.0;
                                const double res = team_residual(
                                    x, t, rho, g ? &dx : nullptr, g ? &dt : nullptr);
                                if (g) {
                                    g->x = dx;
                                    g->t = dt;
                                }
                                return res;
                            });
                    } else {
                        const double rho = params.rho;
                        const double w = cfg.soft_weight;
                        ocp.lagrange_terms.push_back(
                            [team_residual, rho, w](const VectorXd& x, const VectorXd&,
                                                    const VectorXd&, double t,
                                                    StageGrad* g) {
                                VectorXd dres;
                                double dt = 0.0;
                                const double res = team_residual(
                                    x, t, rho, g ? &dres : nullptr, g ? &dt : nullptr);
                                VectorXd sw;
                                const double hinge = smooth_max(
                                    Eigen::Vector2d(res, 0.0), rho, g ? &sw : nullptr);
                                if (g) {
                                    g->x = w * sw[0] * dres;
                                    g->t = w * sw[0] * dt;
                                }
                                return w * hinge;
                            });
                    }
                    break;
                }
            }
        }

        VectorXd slo(3 * N), shi(3 * N);
        for (int a = 0; a < N; ++a) {
            slo.segment(3 * a, 3) << -cfg.position_limit, -cfg.velocity_limit, 0.0;
            shi.segment(3 * a, 3) << cfg.position_limit, cfg.velocity_limit, 100.0;
        }
        ocp.state_bounds = Bounds::box(slo, shi);
        ocp.input_bounds = Bounds::box(VectorXd::Constant(N, -cfg.input_limit),
                                       VectorXd::Constant(N, cfg.input_limit));
        ocp.param_bounds = Bounds::unbounded(0);

        VectorXd x0(3 * N);
        for (int a = 0; a < N; ++a)
            x0.segment(3 * a, 3) << cfg.battery.base_position, 0.0, cfg.initial_soc;
        ocp.initial_state_bounds = Bounds::fixed(x0);
        Bounds fb = ocp.state_bounds;
        for (int a = 0; a < N; ++a) {
            fb.lower[3 * a] = cfg.battery.base_position;
            fb.upper[3 * a] = cfg.battery.base_position;
            fb.lower[3 * a + 2] = cfg.soc_floor;
        }
        ocp.final_state_bounds = fb;

        const double wE = cfg.energy_reward_weight;
        if (wE > 0.0)
            ocp.mayer_terms.push_back([wE, N](const BoundaryArgs& ba, BoundaryGrad* g) {
                double v = 0.0;
                for (int a = 0; a < N; ++a) {
                    v -= wE * ba.xf[3 * a + 2];
                    if (g) g->xf[3 * a + 2] = -wE;
                }
                return v;
            });
        ocp.horizon = cfg.horizon;
        return ocp;
    };

    const Mesh mesh = cfg.mesh;
    if (!cfg.use_mpcc) {
        bundle.family = [make_ocp, mesh](const SmoothingParams& params) {
            return transcribe(make_ocp(params, true), mesh);
        };
    } else {
        const SmoothingSchedule schedule = cfg.schedule;
        const MpccOptions mopts = cfg.mpcc;
        bundle.family = [make_ocp, mesh, schedule, mopts,
                         agent_cost](const SmoothingParams& params) {
            NlpProblem base = transcribe(make_ocp(params, false), mesh);
            MpccOptions staged = mopts;
            staged.epsilon = mpcc_epsilon_for_stage(schedule, mopts.epsilon, params);
            return augment_transcription(base, agent_cost(0, params),
                                         agent_cost(1, params), staged);
        };
    }
    bundle.layout = bundle.family(cfg.schedule.stages.front()).layout;

    bundle.info.name = "multi_1d";
    bundle.info.agent_count = N;
    for (int a = 0; a < N; ++a) {
        const std::string s = std::to_string(a + 1);
        bundle.info.state_names.push_back("x" + s);
        bundle.info.state_names.push_back("v" + s);
        bundle.info.state_names.push_back("E" + s);
        bundle.info.input_names.push_back("u" + s);
    }
    {
        const ReferenceSignal ref_copy = ref;
        const double delta = range.delta;
        bundle.info.range_residual = [ref_copy, delta](int a, double t,
                                                       const VectorXd& x) {
            const double e = x[3 * a] - ref_copy.value(t)[0];
            return e * e - delta * delta;
        };
        bundle.info.energy_index = [](int a) { return 3 * a + 2; };
    }

    {
        const int P = bundle.layout.points();
        const double t0 = cfg.horizon.t0;
        const double tf = cfg.horizon.tf;
        const double h = (tf - t0) / bundle.layout.intervals;
        const double T = tf - t0;
        const double ramp = std::min(0.1 * T, 8.0);
        std::vector<double> times(P);
        for (int k = 0; k < P; ++k) times[k] = t0 + h * k;

        Trajectory traj;
        traj.times = Eigen::Map<const VectorXd>(times.data(), P);
        traj.states.resize(P, 3 * N);
        traj.inputs.resize(P, N);
        traj.params.resize(0);
        for (int a = 0; a < N; ++a) {
            // Agents take consecutive tracking shifts across the horizon.
            const double shift = T / N;
            const double w_start = t0 + a * shift + ramp;
            const double w_end = t0 + (a + 1) * shift - ramp;
            std::vector<double> pos(P);
            for (int k = 0; k < P; ++k) {
                const double xr = std::clamp(ref.value(times[k])[0],
                                             -cfg.position_limit, cfg.position_limit);
                const double d = duty(times[k], w_start, w_end, ramp);
                pos[k] = cfg.battery.base_position +
                         d * (xr - cfg.battery.base_position);
            }
            fill_1d_agent(times, pos, cfg.battery, cfg.initial_soc, cfg.velocity_limit,
                          cfg.input_limit, traj.states, traj.inputs, 3 * a, a);
        }
        VectorXd base_guess = bundle.layout.encode(traj);
        if (cfg.use_mpcc) {
            // encode against the base layout, then extend with auxiliaries
            Layout base_layout = bundle.layout;
            base_layout.aux_dim = 0;
            base_guess = base_layout.encode(traj);
            MpccOptions staged = cfg.mpcc;
            staged.epsilon = mpcc_epsilon_for_stage(
                cfg.schedule, cfg.mpcc.epsilon, cfg.schedule.stages.front());
            bundle.initial_guess =
                mpcc_extend_guess(bundle.layout, agent_cost(0, cfg.schedule.stages.front()),
                                  agent_cost(1, cfg.schedule.stages.front()), staged,
                                  base_guess);
        } else {
            bundle.initial_guess = base_guess;
        }
    }
    return bundle;
}

ScenarioBundle build_3d_fixedwing(const ScenarioConfig& cfg) {
    cfg.schedule.check();
    cfg.fixedwing.check();
    cfg.mesh.check();
    ScenarioBundle bundle;
    const ReferenceSignal ref = cfg.range.reference;
    if (ref.dim() != 2)
        throw validation_error("range.reference",
                               "fixedwing_3d needs a 2-D ground track reference");
    if (cfg.formulation == Formulation::Nair)
        throw validation_error("formulation",
                               "fixedwing_3d supports setpoint, air_hard and air_soft");
    if (cfg.horizon.free_tf)
        throw validation_error("horizon", "fixedwing_3d uses a fixed horizon");
    const FixedWingModel fw = cfg.fixedwing;
    {
        double max_rate = 0.0;
        const double t0 = cfg.horizon.t0, tf = cfg.horizon.tf;
        for (int i = 0; i <= 50; ++i) {
            const double t = t0 + (tf - t0) * i / 50.0;
            max_rate = std::max(max_rate, ref.rate(t).norm());
        }
        if (max_rate > fw.speed_max)
            bundle.warnings.push_back(
                "reference ground speed exceeds the maximum airspeed; the always-in-"
                "range constraint is likely infeasible");
    }

    const Formulation f = cfg.formulation;
    auto make_ocp = [cfg, ref, fw, f](const SmoothingParams& params) {
        OcpSpec ocp;
        ocp.state_dim = 6;
        ocp.input_dim = 3;
        ocp.param_dim = 0;
        ocp.agent_count = 1;
        ocp.dynamics = [fw](const VectorXd& x, const VectorXd& u, const VectorXd&,
                            double, DynamicsJac* jac) {
            const double psi = x[3], V = x[4];
            VectorXd fdot(6);
            fdot[0] = V * std::cos(psi);
            fdot[1] = V * std::sin(psi);
            fdot[2] = u[0];
            fdot[3] = u[1];
            fdot[4] = u[2];
            double dP = 0.0;
            fdot[5] = -fw.power(V, jac ? &dP : nullptr) / fw.energy_scale;
            if (jac) {
                jac->x(0, 3) = -V * std::sin(psi);
                jac->x(0, 4) = std::cos(psi);
                jac->x(1, 3) = V * std::cos(psi);
                jac->x(1, 4) = std::sin(psi);
                jac->u(2, 0) = 1.0;
                jac->u(3, 1) = 1.0;
                jac->u(4, 2) = 1.0;
                jac->x(5, 4) = -dP / fw.energy_scale;
            }
            return fdot;
        };
        if (cfg.effort_weight > 0.0)
            ocp.lagrange_terms.push_back(effort_term(cfg.effort_weight));

        const double slope = fw.footprint_slope();
        auto cone_residual = [ref, slope](const VectorXd& x, double t, VectorXd* dx,
                                          double* dt) {
            const VectorXd xr = ref.value(t);
            const double ex = x[0] - xr[0];
            const double ey = x[1] - xr[1];
            const double r = slope * x[2];
            const double res = ex * ex + ey * ey - r * r;
            if (dx) {
                dx->setZero(x.size());
                (*dx)[0] = 2.0 * ex;
                (*dx)[1] = 2.0 * ey;
                (*dx)[2] = -2.0 * slope * r;
                const VectorXd rate = ref.rate(t);
                if (dt) *dt = -2.0 * ex * rate[0] - 2.0 * ey * rate[1];
            }
            return res;
        };

        if (f == Formulation::AirHard) {
            ocp.path_constraints.push_back([cone_residual](const VectorXd& x,
                                                           const VectorXd&,
                                                           const VectorXd&, double t,
                                                           StageGrad* g) {
                VectorXd dx;
                double dt = 0.0;
                const double res =
                    cone_residual(x, t, g ? &dx : nullptr, g ? &dt : nullptr);
                if (g) {
                    g->x = dx;
                    g->t = dt;
                }
                return res;
            });
        } else if (f == Formulation::AirSoft) {
            const double w = cfg.soft_weight;
            const double rho = params.rho;
            ocp.lagrange_terms.push_back([cone_residual, w, rho](const VectorXd& x,
                                                                 const VectorXd&,
                                                                 const VectorXd&,
                                                                 double t, StageGrad* g) {
                VectorXd dres;
                double dt = 0.0;
                const double res =
                    cone_residual(x, t, g ? &dres : nullptr, g ? &dt : nullptr);
                VectorXd sw;
                const double hinge =
                    smooth_max(Eigen::Vector2d(res, 0.0), rho, g ? &sw : nullptr);
                if (g) {
                    g->x = w * sw[0] * dres;
                    g->t = w * sw[0] * dt;
                }
                return w * hinge;
            });
        } else {
            const double q = cfg.setpoint_q, r = cfg.setpoint_r;
            ocp.lagrange_terms.push_back([ref, q, r](const VectorXd& x, const VectorXd& u,
                                                     const VectorXd&, double t,
                                                     StageGrad* g) {
                const VectorXd xr = ref.value(t);
                const double ex = x[0] - xr[0];
                const double ey = x[1] - xr[1];
                if (g) {
                    g->x[0] = 2.0 * q * ex;
                    g->x[1] = 2.0 * q * ey;
                    g->u = 2.0 * r * u;
                    const VectorXd rate = ref.rate(t);
                    g->t = -2.0 * q * (ex * rate[0] + ey * rate[1]);
                }
                return q * (ex * ex + ey * ey) + r * u.squaredNorm();
            });
        }

        if (f != Formulation::Setpoint)
            ocp.mayer_terms.push_back([](const BoundaryArgs& ba, BoundaryGrad* g) {
                if (g) g->xf[5] = -1.0;
                return -ba.xf[5];
            });

        VectorXd slo(6), shi(6);
        slo << -2000.0, -2000.0, 0.0, -1000.0, fw.speed_min, 0.0;
        shi << 2000.0, 2000.0, fw.ceiling, 1000.0, fw.speed_max, 100.0;
        ocp.state_bounds = Bounds::box(slo, shi);
        VectorXd ulo(3), uhi(3);
        ulo << -fw.climb_rate_max, -fw.turn_rate_max, -fw.accel_max;
        uhi << fw.climb_rate_max, fw.turn_rate_max, fw.accel_max;
        ocp.input_bounds = Bounds::box(ulo, uhi);
        ocp.param_bounds = Bounds::unbounded(0);

        VectorXd x0(6);
        if (cfg.fixedwing_start.size() == 6) {
            x0 = cfg.fixedwing_start;
        } else {
            const VectorXd c = ref.value(cfg.horizon.t0);
            const double orbit =
                std::clamp(1.05 * fw.loiter_speed() / fw.turn_rate_max,
                           0.3 * fw.footprint_radius_at_ceiling,
                           0.9 * fw.footprint_radius_at_ceiling);
            x0 << c[0] + orbit, c[1], fw.ceiling, M_PI / 2.0, fw.loiter_speed(),
                cfg.initial_soc;
        }
        ocp.initial_state_bounds = Bounds::fixed(x0);
        ocp.horizon = cfg.horizon;
        return ocp;
    };

    const Mesh mesh = cfg.mesh;
    bundle.family = [make_ocp, mesh](const SmoothingParams& params) {
        return transcribe(make_ocp(params), mesh);
    };
    bundle.layout = bundle.family(cfg.schedule.stages.front()).layout;

    bundle.info.name = "fixedwing_3d";
    bundle.info.agent_count = 1;
    bundle.info.state_names = {"x", "y", "z", "psi", "V", "E"};
    bundle.info.input_names = {"u_climb", "u_turn", "u_accel"};
    {
        const ReferenceSignal ref_copy = ref;
        const double slope = fw.footprint_slope();
        bundle.info.range_residual = [ref_copy, slope](int, double t, const VectorXd& x) {
            const VectorXd xr = ref_copy.value(t);
            const double ex = x[0] - xr[0];
            const double ey = x[1] - xr[1];
            const double r = slope * x[2];
            return ex * ex + ey * ey - r * r;
        };
        bundle.info.energy_index = [](int) { return 5; };
    }

    {
        // Circular loiter guess around the initial target position.
        const OcpSpec probe = make_ocp(cfg.schedule.stages.front());
        const VectorXd x0 = probe.initial_state_bounds.lower;
        const VectorXd c = ref.value(cfg.horizon.t0);
        const int P = bundle.layout.points();
        const double t0 = cfg.horizon.t0;
        const double h = (cfg.horizon.tf - t0) / bundle.layout.intervals;
        double radius = std::hypot(x0[0] - c[0], x0[1] - c[1]);
        if (radius < 1.0) radius = 1.0;
        const double V0 = x0[4];
        double omega = V0 / radius;
        if (omega > fw.turn_rate_max) {
            omega = fw.turn_rate_max;
            radius = V0 / omega;
        }
        const double theta0 = std::atan2(x0[1] - c[1], x0[0] - c[0]);
        Trajectory traj;
        traj.times.resize(P);
        traj.states.resize(P, 6);
        traj.inputs.resize(P, 3);
        traj.params.resize(0);
        double soc = x0[5];
        for (int k = 0; k < P; ++k) {
            const double t = t0 + h * k;
            const double theta = theta0 + omega * (t - t0);
            traj.times[k] = t;
            traj.states(k, 0) = c[0] + radius * std::cos(theta);
            traj.states(k, 1) = c[1] + radius * std::sin(theta);
            traj.states(k, 2) = x0[2];
            traj.states(k, 3) = theta + M_PI / 2.0;
            traj.states(k, 4) = V0;
            traj.states(k, 5) = soc;
            traj.inputs(k, 0) = 0.0;
            traj.inputs(k, 1) = omega;
            traj.inputs(k, 2) = 0.0;
            soc = std::clamp(soc - h * fw.power(V0) / fw.energy_scale, 0.0, 100.0);
        }
        traj.states.row(0).head(6) = x0.transpose();
        bundle.initial_guess = bundle.layout.encode(traj);
    }
    return bundle;
}

}  // namespace rangetrack

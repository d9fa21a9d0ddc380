#!/usr/bin/env python3
"""
liectl - Main Entry Point and CLI Interface
Runs the toolkit's analyses from named presets, JSON run documents and flags, writing
CSV/JSON artifacts. Exit codes: 0 ok, 2 invalid input, 3 numerical failure.
"""

import os
import sys
import math
import functools
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Sequence

import click
import numpy as np
from tabulate import tabulate

from config import Config, get_benchmark, list_benchmarks, load_run_config, merge_params
from models import (StateSpaceModel, TaskMode, ValidationError, NumericalError)
from utils import setup_logging, log_action, write_csv, write_json, validate_system_requirements


@dataclass
class RunContext:
    """Global options shared by every subcommand"""

    seed: int = 0
    output_dir: str = Config.OUTPUT_DIR
    config_path: Optional[str] = None

    def params(self, command: str, overrides: Dict[str, Any]) -> Dict[str, Any]:
        return merge_params(get_benchmark(command), load_run_config(self.config_path), overrides)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def meta(self, command: str, dt: Any = None) -> Dict[str, Any]:
        return {'command': command, 'seed': self.seed, 'dt': dt}


def handle_errors(func):
    """Map ValidationError to exit 2 and NumericalError to exit 3"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            log_action(f"Invalid input: {e}", "main", level='ERROR')
            click.echo(f"❌ Invalid input: {e}", err=True)
            sys.exit(2)
        except NumericalError as e:
            log_action(f"Numerical failure: {e}", "main", level='ERROR',
                       additional_data={'error': type(e).__name__})
            click.echo(f"❌ Numerical failure ({type(e).__name__}): {e}", err=True)
            sys.exit(3)
    return wrapper


# =============================================================================
# Parameter helpers
# =============================================================================

def _number(params: Dict[str, Any], key: str, positive: bool = False,
            non_negative: bool = False) -> float:
    value = params.get(key)
    if value is None:
        raise ValidationError(f"Missing parameter: {key}")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"Parameter {key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"Parameter {key} must be finite")
    if positive and value <= 0:
        raise ValidationError(f"Parameter {key} must be positive, got {value}")
    if non_negative and value < 0:
        raise ValidationError(f"Parameter {key} must be non-negative, got {value}")
    return value


def _vector(value: Any, name: str) -> List[float]:
    """Accept a list or a comma-separated string"""
    if value is None:
        raise ValidationError(f"Missing parameter: {name}")
    if isinstance(value, str):
        try:
            return [float(v) for v in value.split(',') if v.strip()]
        except ValueError:
            raise ValidationError(f"Parameter {name} must be a comma-separated list of numbers")
    try:
        return [float(v) for v in np.atleast_1d(value)]
    except (TypeError, ValueError):
        raise ValidationError(f"Parameter {name} must be a list of numbers")


def _summary(title: str, rows: Sequence[Sequence[Any]]) -> None:
    click.echo(f"📊 {title}")
    click.echo(tabulate(rows, headers=['Quantity', 'Value'], tablefmt='grid'))


# =============================================================================
# CLI group
# =============================================================================

@click.group()
@click.option('--debug', is_flag=True, help='Enable debug logging')
@click.option('--config', 'config_path', default=None, help='JSON run document; flags override its fields')
@click.option('--seed', type=int, default=0, show_default=True, help='Seed for stochastic runs')
@click.option('--output-dir', default=None, help='Directory for CSV/JSON artifacts')
@click.option('--log-file', default=None, help='Rotating log file (default from LIECTL_LOG_FILE)')
@click.pass_context
def main(ctx, debug, config_path, seed, output_dir, log_file):
    """liectl - Lie-derivative control toolkit"""
    level = 'DEBUG' if debug else Config.LOG_LEVEL
    setup_logging(level, log_file if log_file is not None else Config.LOG_FILE)
    ctx.obj = RunContext(seed=seed, output_dir=output_dir or Config.OUTPUT_DIR, config_path=config_path)


@main.command()
def version():
    """Show the toolkit version"""
    click.echo(f"liectl {Config.VERSION}")


@main.command()
def catalog():
    """List named example systems and benchmark presets"""
    from catalog import list_catalog

    rows = [[e['name'], e['kind'], e['description']] for e in list_catalog()]
    click.echo(tabulate(rows, headers=['Name', 'Kind', 'Description'], tablefmt='grid'))
    click.echo()
    rows = [[e['command'], e['name'], e['description']] for e in list_benchmarks()]
    click.echo(tabulate(rows, headers=['Command', 'Preset', 'Description'], tablefmt='grid'))


@main.command()
def doctor():
    """Check runtime requirements"""
    checks = validate_system_requirements()
    for name, ok in checks.items():
        icon = "✅" if ok else "❌"
        click.echo(f"{icon} {name.replace('_', ' ')}")
    if not all(checks.values()):
        sys.exit(1)


# =============================================================================
# linear
# =============================================================================

@main.command()
@click.option('--model', 'model_path', default=None, help='Model JSON {A, B, C, D}')
@click.option('--task', type=click.Choice(['simulate', 'discrete', 'gramian', 'rank', 'minenergy',
                                           'freq', 'feedback', 'steady', 'inverse']),
              default='rank', show_default=True)
@click.option('--T', 'T', type=float, default=None, help='Horizon')
@click.option('--dt', type=float, default=None, help='Step')
@click.pass_obj
@handle_errors
def linear(run: RunContext, model_path, task, T, dt):
    """Linear state-space operators"""
    import linear_ss

    params = run.params('linear', {'T': T, 'dt': dt})
    model = linear_ss.load_model(model_path) if model_path else StateSpaceModel.from_dict(params['model'])
    step = _number(params, 'dt', positive=True)
    horizon = _number(params, 'T', positive=True)
    meta = run.meta('linear', step)
    name = f"linear_{task}"

    if task == 'rank':
        result = linear_ss.rank_condition(model)
        write_json(run.path(f"{name}.json"), result, meta)
        _summary("Rank condition", [['rank', result['rank']], ['controllable', result['controllable']]])

    elif task == 'simulate':
        traj = linear_ss.simulate_continuous(model, _vector(params['x0'], 'x0'),
                                             _vector(params.get('u', [0.0]), 'u'), horizon, step)
        write_csv(run.path(f"{name}.csv"), traj.columns(), traj.to_rows(), meta)
        _summary("Continuous simulation", [['samples', traj.n_samples],
                                           ['final state', traj.final_state.tolist()]])

    elif task == 'discrete':
        steps = int(params.get('N', 10))
        u = _vector(params.get('u', [0.0]), 'u')
        sequence = np.tile(u, (steps, 1))
        traj = linear_ss.simulate_discrete(model, _vector(params['x0'], 'x0'), sequence, steps)
        write_csv(run.path(f"{name}.csv"), traj.columns(), traj.to_rows(), run.meta('linear', 1.0))
        _summary("Discrete simulation", [['steps', steps], ['final state', traj.final_state.tolist()]])

    elif task == 'gramian':
        W = linear_ss.controllability_gramian(model, horizon)
        result = {'gramian': W, 'condition': float(np.linalg.cond(W))}
        write_json(run.path(f"{name}.json"), result, meta)
        _summary("Controllability Gramian", [['condition', result['condition']]])

    elif task == 'minenergy':
        x0 = _vector(params['x0'], 'x0')
        xT = _vector(params['xT'], 'xT')
        u = linear_ss.min_energy_control(model, x0, xT, horizon, step)
        traj = linear_ss.simulate_continuous(model, x0, u, horizon, step)
        miss = float(np.linalg.norm(traj.final_state - np.asarray(xT)))
        write_csv(run.path(f"{name}.csv"), traj.columns(), traj.to_rows(), meta)
        write_json(run.path(f"{name}.json"), {'final_state': traj.final_state, 'endpoint_error': miss}, meta)
        _summary("Minimum-energy transfer", [['endpoint error', miss]])

    elif task == 'freq':
        response = linear_ss.frequency_response(model, _vector(params['omega'], 'omega'))
        write_csv(run.path(f"{name}.csv"), ['omega', 're', 'im', 'mag', 'phase'], response.to_rows(), meta)
        _summary("Frequency response", [['frequencies', len(response.frequencies)],
                                        ['resonances', response.resonances]])

    elif task == 'feedback':
        K = np.atleast_2d(np.asarray(params['K'], dtype=float))
        closed = linear_ss.output_feedback(model, K)
        eigenvalues = np.linalg.eigvals(closed.A)
        residuals = [abs(linear_ss.eigenvalue_placement_residual(model, K, lam, clear_poles=True))
                     for lam in eigenvalues]
        result = {'A_closed': closed.A, 'eigenvalues': eigenvalues, 'max_residual': max(residuals)}
        write_json(run.path(f"{name}.json"), result, meta)
        _summary("Output feedback", [['eigenvalues', [complex(e) for e in eigenvalues]],
                                     ['max residual', result['max_residual']]])

    elif task == 'steady':
        result = linear_ss.steady_state_output(model, _vector(params.get('u', [0.0]), 'u'))
        write_json(run.path(f"{name}.json"), result, meta)
        _summary("Steady state", [['output', result['output'].tolist()], ['stable', result['stable']]])

    elif task == 'inverse':
        inverse = linear_ss.inverse_system(model)
        write_json(run.path(f"{name}.json"), inverse.to_dict(), meta)
        _summary("Inverse system", [['states', inverse.n]])

    click.echo(f"✅ linear {task} complete")


# =============================================================================
# vdp / tracer
# =============================================================================

@main.command()
@click.option('--alpha', type=float, default=None)
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.pass_obj
@handle_errors
def vdp(run: RunContext, alpha, T, dt):
    """Van der Pol limit cycle: harmonic balance against simulation"""
    from describing_function import harmonic_balance_solve, vdp_loop, vdp_tracer, measure_cycle

    params = run.params('vdp', {'alpha': alpha, 'T': T, 'dt': dt})
    a = _number(params, 'alpha', positive=True)
    horizon = _number(params, 'T', positive=True)
    step = _number(params, 'dt', positive=True)
    x0 = _vector(params['x0'], 'x0')
    meta = run.meta('vdp', step)

    prediction = harmonic_balance_solve(vdp_loop(a), _number(params, 'A0', positive=True),
                                        _number(params, 'omega0', positive=True))
    traj = vdp_tracer(a, x0, horizon, step)
    measured = measure_cycle(traj)

    report = {
        'alpha': a,
        'prediction': {'A': prediction.A, 'omega': prediction.omega, 'residual': prediction.residual},
        'simulation': measured,
        'gap': {'amplitude': abs(measured['amplitude'] - prediction.A),
                'period': abs(measured['period'] - 2.0 * math.pi / prediction.omega)},
    }
    write_json(run.path('vdp_prediction.json'), report, meta)
    write_csv(run.path('vdp_trajectory.csv'), traj.columns(), traj.to_rows(), meta)
    write_csv(run.path('vdp_tracer.csv'), ['t', 'x', 'xdot'], traj.to_rows(), meta)

    _summary(f"Van der Pol (alpha={a:g})", [
        ['predicted A', prediction.A], ['predicted omega', prediction.omega],
        ['measured amplitude', measured['amplitude']], ['measured period', measured['period']],
    ])
    click.echo("✅ vdp complete")


@main.command()
@click.option('--system', type=click.Choice(['spring', 'van-der-pol']), default=None)
@click.option('--k', type=float, default=None, help='Spring damping')
@click.option('--alpha', type=float, default=None)
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.pass_obj
@handle_errors
def tracer(run: RunContext, system, k, alpha, T, dt):
    """Tracer-plot data (t, x, x') for the damped spring or Van der Pol"""
    from describing_function import spring_tracer, vdp_tracer

    params = run.params('tracer', {'system': system, 'k': k, 'alpha': alpha, 'T': T, 'dt': dt})
    horizon = _number(params, 'T', positive=True)
    step = _number(params, 'dt', positive=True)
    x0 = _vector(params['x0'], 'x0')
    if params['system'] == 'spring':
        traj = spring_tracer(_number(params, 'k', non_negative=True), x0, horizon, step)
    elif params['system'] == 'van-der-pol':
        traj = vdp_tracer(_number(params, 'alpha', positive=True), x0, horizon, step)
    else:
        raise ValidationError(f"Unknown tracer system: {params['system']}")

    write_csv(run.path(f"tracer_{params['system']}.csv"), ['t', 'x', 'xdot'], traj.to_rows(),
              run.meta('tracer', step))
    click.echo(f"✅ tracer {params['system']}: {traj.n_samples} samples")


# =============================================================================
# operator
# =============================================================================

@main.command()
@click.option('--K', 'K', type=float, default=None, help='Operator gain (1/s)')
@click.option('--tau', type=float, default=None, help='Reaction delay (s)')
@click.option('--mode', type=click.Choice([m.value for m in TaskMode]), default=None)
@click.option('--forcing', type=click.Choice(['step', 'sine', 'zero']), default=None)
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.pass_obj
@handle_errors
def operator(run: RunContext, K, tau, mode, forcing, T, dt):
    """Crossover-model tracking: margin, Bode data, tracking trace and cost"""
    from human_operator import (CrossoverParams, ExpandedCrossoverParams, CostWeights, TrackingTask,
                                crossover_margin, crossover_frequency_response,
                                expanded_frequency_response, response_rows, simulate_tracking,
                                cost_functional)

    params = run.params('operator', {'K': K, 'tau': tau})
    task_doc = dict(params.get('task') or {})
    task_doc.update({k: v for k, v in {'mode': mode, 'forcing': forcing, 'T': T, 'dt': dt}.items()
                     if v is not None})

    op = CrossoverParams(K=_number(params, 'K', positive=True), tau=_number(params, 'tau', non_negative=True))
    expanded = ExpandedCrossoverParams(K=op.K, tau=op.tau,
                                       T_L=_number(params, 'T_L'), T_I=_number(params, 'T_I'),
                                       T_N=_number(params, 'T_N'), alpha_drop=_number(params, 'alpha_drop'))
    task = TrackingTask(mode=task_doc.get('mode', 'compensatory'), forcing=task_doc.get('forcing', 'step'),
                        T=_number(task_doc, 'T', positive=True), dt=_number(task_doc, 'dt', positive=True))
    weights = CostWeights(**params.get('weights', {}))
    omegas = _vector(params['omega'], 'omega')
    if 0 < op.tau < task.dt:
        raise ValidationError(f"Reaction delay {op.tau} is shorter than dt {task.dt}")
    meta = run.meta('operator', task.dt)

    margin = crossover_margin(op)
    write_json(run.path('operator_margin.json'), margin, meta)
    basic = crossover_frequency_response(op, omegas)
    full = expanded_frequency_response(expanded, omegas)
    write_csv(run.path('operator_bode.csv'), ['omega', 're', 'im', 'mag', 'phase'],
              response_rows(omegas, basic), meta)
    write_csv(run.path('operator_bode_expanded.csv'), ['omega', 're', 'im', 'mag', 'phase'],
              response_rows(omegas, full), meta)

    traj = simulate_tracking(task, op)
    target = task.target()
    error = traj.outputs[:, 0]
    rows = []
    for t, e, u in zip(traj.times, error, traj.inputs[:, 0]):
        r = target(t) if t >= 0 else 0.0
        rows.append([t, r, r - e, e, u])
    write_csv(run.path('operator_tracking.csv'), ['t', 'target', 'output', 'error', 'control'], rows, meta)

    cost = cost_functional(traj, weights)
    write_json(run.path('operator_cost.json'), {'J': cost, 'weights': weights.to_dict()}, meta)

    _summary(f"Crossover operator (K={op.K:g}, tau={op.tau:g})", [
        ['omega_c', margin['omega_c']], ['phase margin', margin['phase_margin']],
        ['final |error|', abs(float(error[-1]))], ['cost J', cost],
    ])
    click.echo("✅ operator complete")


# =============================================================================
# feedbacklin
# =============================================================================

@main.command()
@click.option('--system', type=click.Choice(['cubic', 'sine', 'double-integrator']), default=None)
@click.option('--beta', default=None, help='Comma-separated beta_1..beta_r')
@click.option('--cutoff', type=float, default=None, help='Butterworth cutoff; overrides beta')
@click.option('--v', 'v', type=float, default=None, help='Constant setpoint')
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.pass_obj
@handle_errors
def feedbacklin(run: RunContext, system, beta, cutoff, v, T, dt):
    """Exact input/output linearization and its verification"""
    from feedback_lin import (BUILTIN_SYSTEMS, butterworth_beta, relative_degree, synthesize_controller,
                              closed_loop_simulate, verify_linearity)

    params = run.params('feedbacklin', {'system': system, 'beta': beta, 'v': v, 'T': T, 'dt': dt})
    if params['system'] not in BUILTIN_SYSTEMS:
        raise ValidationError(f"Unknown system: {params['system']}")
    sys_ = BUILTIN_SYSTEMS[params['system']]()
    x0 = _vector(params['x0'], 'x0')
    horizon = _number(params, 'T', positive=True)
    step = _number(params, 'dt', positive=True)
    setpoint = _number(params, 'v')
    if cutoff is not None:
        coefficients = butterworth_beta(relative_degree(sys_, x0), cutoff)
    else:
        coefficients = _vector(params['beta'], 'beta')
    meta = run.meta('feedbacklin', step)

    ctrl = synthesize_controller(sys_, coefficients, x0)
    traj = closed_loop_simulate(sys_, ctrl, setpoint, x0, horizon, step)
    report = verify_linearity(traj, coefficients, setpoint)

    rows = np.column_stack([traj.times, traj.outputs[:, 0], report['y_ref'], traj.inputs[:, 0]]).tolist()
    write_csv(run.path('feedbacklin_output.csv'), ['t', 'y', 'y_ref', 'u'], rows, meta)
    write_json(run.path('feedbacklin_report.json'), {
        'system': sys_.name, 'relative_degree': ctrl.r, 'beta': coefficients,
        'max_deviation': report['max_deviation'], 'rms_deviation': report['rms_deviation'],
    }, meta)

    _summary(f"Feedback linearization ({sys_.name})", [
        ['relative degree', ctrl.r], ['beta', coefficients],
        ['max deviation', report['max_deviation']], ['rms deviation', report['rms_deviation']],
    ])
    click.echo("✅ feedbacklin complete")


# =============================================================================
# adaptive
# =============================================================================

@main.command()
@click.option('--benchmark', type=click.Choice(['scalar']), default='scalar', show_default=True)
@click.option('--update-gain', type=float, default=None)
@click.option('--alpha', type=float, default=None)
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.pass_obj
@handle_errors
def adaptive(run: RunContext, benchmark, update_gain, alpha, T, dt):
    """Adaptive Lie-derivative tracking benchmark"""
    from adaptive_lie import scalar_benchmark, run_adaptive_tracking

    params = run.params('adaptive', {'update_gain': update_gain, 'alpha': alpha, 'T': T, 'dt': dt})
    horizon = _number(params, 'T', positive=True)
    step = _number(params, 'dt', positive=True)
    for key in ('gamma_true', 'd_true', 'gamma_hat0', 'd_hat0', 'alpha', 'update_gain'):
        _number(params, key)
    sys_, est0, ref, x0 = scalar_benchmark(params)
    meta = run.meta('adaptive', step)

    result = run_adaptive_tracking(sys_, est0, ref, x0, horizon, step)
    tail = result.tail_rms_error(0.2)
    write_csv(run.path('adaptive_trace.csv'), result.columns(), result.to_rows(), meta)
    write_json(run.path('adaptive_summary.json'), {
        'benchmark': benchmark, 'tail_rms_error': tail, 'threshold': 0.05,
        'passed': tail < 0.05, 'clamp_count': result.clamp_count,
        'gamma_hat': result.final.gamma_hat, 'd_hat': result.final.d_hat,
    }, meta)

    _summary("Adaptive tracking (scalar)", [
        ['tail RMS error', tail], ['clamp events', result.clamp_count],
        ['gamma_hat', result.final.gamma_hat], ['d_hat', result.final.d_hat],
    ])
    click.echo(f"{'✅' if tail < 0.05 else '❌'} adaptive benchmark")


# =============================================================================
# bracket
# =============================================================================

@main.command()
@click.option('--system', type=click.Choice(['car', 'unicycle', 'double-integrator']), default=None)
@click.option('--depth', type=int, default=None)
@click.option('--at', 'at', default=None, help='State as comma-separated values')
@click.option('--eps', type=float, default=None, help='Maneuver segment length')
@click.pass_obj
@handle_errors
def bracket(run: RunContext, system, depth, at, eps):
    """Lie-bracket tree, rank test and maneuver schedule"""
    from catalog import get_system
    from controllability_nl import (bracket_tree, stlc_rank, drift_controllability, commutator_maneuver,
                                    parking_maneuver, execute_maneuver)

    params = run.params('bracket', {'system': system, 'depth': depth, 'at': at, 'eps': eps})
    sys_ = get_system(params['system'])
    x = _vector(params['at'], 'at')
    if at is None and len(x) != sys_.dim:
        # preset point belongs to another system
        x = [0.0] * sys_.dim
    levels = int(_number(params, 'depth', non_negative=True))
    step = _number(params, 'dt', positive=True)
    meta = run.meta('bracket', step)

    tree = bracket_tree(sys_, levels, x)
    rank = stlc_rank(sys_, x, levels)
    report = {'system': params['system'], 'depth': levels, 'at': x, 'rank': rank['rank'],
              'controllable': rank['controllable'],
              'nodes': [{'label': n['label'], 'depth': n['depth'], 'value': n['value']} for n in tree]}
    if not sys_.driftless and sys_.m == 1:
        report['drift_criterion'] = drift_controllability(sys_, x)

    if sys_.driftless and sys_.m == 2:
        length = _number(params, 'eps', positive=True)
        if params['system'] == 'car':
            maneuver = parking_maneuver(sys_, length, x0=x)
        else:
            maneuver = commutator_maneuver(sys_, 0, 1, length)
        executed = execute_maneuver(sys_, maneuver, x, dt=min(step, length / 10.0))
        report['maneuver'] = {'labels': maneuver.labels, 'displacement': executed.displacement()}
        write_csv(run.path('bracket_maneuver.csv'), maneuver.columns(), maneuver.to_rows(), meta)

    write_json(run.path('bracket_tree.json'), report, meta)
    rows = [[n['label'], n['depth'], np.round(n['value'], 12).tolist()] for n in tree]
    click.echo(tabulate(rows, headers=['Bracket', 'Depth', 'Value'], tablefmt='grid'))
    icon = "✅" if rank['controllable'] else "❌"
    click.echo(f"{icon} rank {rank['rank']} of {sys_.dim}")


# =============================================================================
# langevin
# =============================================================================

@main.command()
@click.option('--runs', type=int, default=None)
@click.option('--gamma', type=float, default=None)
@click.option('--m', 'm', type=float, default=None)
@click.option('--Q', 'Q', type=float, default=None)
@click.option('--t0', type=float, default=None, help='Mean free time between kicks')
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.option('--t-start', type=float, default=None)
@click.pass_obj
@handle_errors
def langevin(run: RunContext, runs, gamma, m, Q, t0, T, dt, t_start):
    """Shot-noise Langevin ensemble and its stationary statistics"""
    from stochastic_kicks import KickProcess, LangevinParams, simulate_langevin_ensemble, ensemble_stats

    params = run.params('langevin', {'runs': runs, 'gamma': gamma, 'm': m, 'Q': Q, 't0': t0,
                                     'T': T, 'dt': dt, 't_start': t_start})
    n_runs = int(_number(params, 'runs', positive=True))
    lp = LangevinParams(gamma=_number(params, 'gamma', positive=True), m=_number(params, 'm', positive=True),
                        Q=_number(params, 'Q', non_negative=True))
    proc = KickProcess.from_fluctuation(lp.Q, _number(params, 't0', positive=True), seed=run.seed)
    horizon = _number(params, 'T', positive=True)
    step = _number(params, 'dt', positive=True)
    start = _number(params, 't_start', non_negative=True)
    if start >= horizon:
        raise ValidationError("t_start must lie before T")
    meta = run.meta('langevin', step)

    ensemble = simulate_langevin_ensemble(lp, proc, horizon, step, n_runs, seed=run.seed)
    stats = ensemble_stats(ensemble, start, dt=step, max_lag=int(params.get('max_lag', 100)))
    predicted = lp.stationary_second_moment
    relative = abs(stats.second_moment - predicted) / predicted if predicted > 0 else None

    write_json(run.path('langevin_summary.json'), {
        'runs': n_runs, 'mean': stats.mean, 'var': stats.var, 'second_moment': stats.second_moment,
        'predicted_second_moment': predicted, 'relative_error': relative,
        'decay_constant': stats.decay_constant, 'expected_decay': lp.gamma / lp.m,
    }, meta)
    write_csv(run.path('langevin_autocorr.csv'), ['lag', 'autocorr'],
              list(zip(stats.lag_times, stats.autocorr)), meta)
    times = step * np.arange(ensemble.shape[1])
    write_csv(run.path('langevin_sample.csv'), ['t', 'v'], list(zip(times, ensemble[0])), meta)

    _summary(f"Langevin ensemble ({n_runs} runs)", [
        ['<v^2> measured', stats.second_moment], ['<v^2> predicted', predicted],
        ['decay constant', stats.decay_constant],
    ])
    click.echo("✅ langevin complete")


# =============================================================================
# sliding
# =============================================================================

@main.command()
@click.option('--x0', default=None, help='Initial state')
@click.option('--T', 'T', type=float, default=None)
@click.option('--dt', type=float, default=None)
@click.option('--band', type=float, default=None)
@click.pass_obj
@handle_errors
def sliding(run: RunContext, x0, T, dt, band):
    """Filippov sliding on a switching surface"""
    from catalog import get_system
    from models import IntegratorConfig
    from ode_engine import integrate_variable_structure

    params = run.params('sliding', {'x0': x0, 'T': T, 'dt': dt, 'band': band})
    surface = get_system(params['system'])
    start = _vector(params['x0'], 'x0')
    horizon = _number(params, 'T', positive=True)
    step = _number(params, 'dt', positive=True)
    width = _number(params, 'band', positive=True)
    meta = run.meta('sliding', step)

    traj = integrate_variable_structure(surface, start, 0.0, horizon, IntegratorConfig(dt=step), width)
    header = ['t'] + [f"x{i + 1}" for i in range(surface.dim)] + ['s', 'sliding']
    write_csv(run.path('sliding_trajectory.csv'), header, traj.to_rows(), meta)
    write_csv(run.path('sliding_events.csv'), ['t', 'event'], traj.event_rows(), meta)

    rows = [[f"{t:.6g}", label] for t, label in traj.events] or [['-', 'no events']]
    click.echo(tabulate(rows, headers=['t', 'Event'], tablefmt='grid'))
    click.echo(f"✅ sliding complete: final s = {traj.outputs[-1, 0]:.3g}")


if __name__ == '__main__':
    main(prog_name='liectl')

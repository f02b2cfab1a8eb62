"""Command-line interface for the critical random-graph lab

Usage examples:
  python -m scripts.cli gen --model cm --tau 3.5 --n 1000 --seed 7 --out g.edges
  python -m scripts.cli percolate --mode bond --p 0.5 --in g.edges --out gp.edges
  python -m scripts.cli stats --in gp.edges --out components.csv
  python -m scripts.cli experiment --spec configs/example_experiment.toml --threads 4 --out results/

Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.
"""
import json
import logging
import math
import sys
from pathlib import Path

import click
import numpy as np

from critgraph import coalescent, exploration, formats, graph_gen, harness, limit_graph, limit_processes, percolation
from critgraph.components import component_table, decompose
from critgraph.config_loader import load_settings
from critgraph.degree_models import (DegreeSequence, build_power_law_degrees, build_power_law_weights,
                                     criticality, scaling_constants)
from critgraph.error_handling import LabError
from critgraph.seeding import entropy_seed, make_rng
from critgraph.telemetry import TelemetryManager

logger = logging.getLogger('critgraph.cli')
telemetry = TelemetryManager('cli')

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
GRAPH_MODELS = ('cm', 'ecm', 'uniform_simple', 'grg', 'chunglu', 'norrosreittu', 'nr_q', 'ptree')
PERCOLATION_MODES = ('bond', 'janson', 'fountoulakis', 'sandwich')
DEGREE_MODES = ('janson', 'fountoulakis', 'sandwich')


def _resolve_seed(seed):
    resolved = entropy_seed() if seed is None else seed
    click.echo(f'seed: {resolved}')
    return resolved, make_rng(resolved)


def _power_law(tau, n, cf, lam=0.0):
    return build_power_law_degrees(tau, n, cf, lam)


def _require_out(out):
    if not out:
        raise click.UsageError('--out is required')
    return Path(out)


seed_option = click.option('--seed', type=int, default=None, help='Master seed; drawn from system entropy when omitted')
out_option = click.option('--out', 'out', default=None, help='Output path')
tau_option = click.option('--tau', type=float, default=3.5, show_default=True, help='Power-law exponent')
n_option = click.option('--n', 'n', type=int, default=1000, show_default=True, help='Number of vertices')
cf_option = click.option('--cf', 'cf', type=float, default=1.0, show_default=True, help='Tail constant c_F')
lambda_option = click.option('--lambda', 'lam', type=float, default=0.0, show_default=True,
                             help='Critical-window location')


@click.group()
@click.option('--verbose', '-v', is_flag=True, default=False, help='Log at INFO level')
def cli(verbose):
    """Critical random-graph simulation lab"""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format=LOG_FORMAT)


@cli.command()
@click.option('--model', type=click.Choice(GRAPH_MODELS), default='cm', show_default=True)
@tau_option
@n_option
@cf_option
@lambda_option
@click.option('--p', 'p', type=float, default=None, help='Connection scale q for nr_q')
@seed_option
@out_option
@telemetry.trace('gen')
def gen(model, tau, n, cf, lam, p, seed, out):
    """Generate a graph and write an edge list with a JSON sidecar"""
    out = _require_out(out)
    seed, rng = _resolve_seed(seed)
    if model == 'ptree':
        tree = graph_gen.ptree_direct(np.full(n, 1.0 / n), rng)
        graph = graph_gen.SimpleGraph(n, np.array(tree.edges, dtype=np.int64).reshape(-1, 2))
    elif model in ('grg', 'chunglu', 'norrosreittu', 'nr_q'):
        if model == 'nr_q' and p is None:
            raise click.UsageError('nr_q needs --p as the connection scale q')
        graph = graph_gen.inhomogeneous_graph(build_power_law_weights(tau, n, cf), model, rng, q=p)
    else:
        d = _power_law(tau, n, cf, lam)
        if model == 'cm':
            graph = graph_gen.config_model(d, rng)
        elif model == 'ecm':
            graph, erased = graph_gen.erased_config_model(d, rng)
            logger.info(f'erased {erased} loops and multi-edges')
        else:
            graph = graph_gen.uniform_simple(d, rng)
    formats.write_edge_list(out, graph, sidecar={'model': model, 'tau': tau, 'cf': cf, 'lambda': lam, 'seed': seed})
    click.echo(f'wrote {graph.num_edges} edges to {out}')


@cli.command()
@click.option('--mode', type=click.Choice(PERCOLATION_MODES), default='bond', show_default=True)
@click.option('--p', 'p', type=float, default=None, help='Explicit percolation probability')
@click.option('--regime', type=click.Choice(percolation.REGIMES), default=None, help='Critical-window regime')
@lambda_option
@tau_option
@n_option
@cf_option
@click.option('--in', 'in_path', default=None, help='Edge list to percolate (bond mode only)')
@seed_option
@out_option
@telemetry.trace('percolate')
def percolate(mode, p, regime, lam, tau, n, cf, in_path, seed, out):
    """Percolate a graph (bond) or a power-law degree sequence (janson, fountoulakis, sandwich)"""
    if mode in DEGREE_MODES and in_path:
        raise click.UsageError(f'{mode} mode needs a degree sequence, not a realized graph; drop --in')
    out = _require_out(out)
    seed, rng = _resolve_seed(seed)
    if in_path:
        host = formats.read_edge_list(in_path)
        seq = DegreeSequence(host.degrees())
    else:
        seq = _power_law(tau, n, cf)
        host = None
    scal = scaling_constants(tau, seq.n)
    regime = regime or percolation.default_regime(scal)
    prob = percolation.critical_p(percolation.PercolationSpec(regime, lam, p), seq, scal)
    if mode == 'bond':
        perc = percolation.bond_percolate(host if host is not None else graph_gen.config_model(seq, rng), prob, rng)
    elif mode == 'janson':
        perc = percolation.janson_percolate(seq, prob, rng)
    elif mode == 'fountoulakis':
        perc = percolation.fountoulakis_percolate(seq, prob, rng)
    else:
        perc = percolation.sandwich_graph(seq, prob, rng)
    sidecar = dict(perc.sidecar(), regime=regime, seed=seed)
    formats.write_edge_list(out, perc.graph, sidecar=sidecar)
    click.echo(f'p={prob:.6g} kept {perc.graph.num_edges} edges -> {out}')


@cli.command()
@click.option('--mode', type=click.Choice(['dfs', 'unit']), default='dfs', show_default=True)
@tau_option
@n_option
@cf_option
@lambda_option
@seed_option
@out_option
@telemetry.trace('explore')
def explore(mode, tau, n, cf, lam, seed, out):
    """Explore a configuration model and write the walk as CSV"""
    out = _require_out(out)
    seed, rng = _resolve_seed(seed)
    d = _power_law(tau, n, cf, lam)
    walker = exploration.explore_dfs if mode == 'dfs' else exploration.explore_unit
    walk, _ = walker(d, rng)
    formats.write_walk_csv(out, walk)
    sizes = sorted((c.size for c in exploration.components_from_walk(walk)), reverse=True)
    click.echo(f'{walk.stages} stages, {walk.component_count} components, largest {sizes[0] if sizes else 0}')


@cli.command()
@click.option('--in', 'in_path', required=True, help='Edge list to decompose')
@seed_option
@out_option
@telemetry.trace('stats')
def stats(in_path, seed, out):
    """Component table of an edge list; prints a JSON summary"""
    _resolve_seed(seed)
    graph = formats.read_edge_list(in_path)
    comps = decompose(graph, diameters=1)
    if out:
        formats.write_component_table(out, component_table(comps))
    degrees, counts = np.unique(graph.degrees(), return_counts=True)
    summary = {
        'n': graph.n,
        'edges': graph.num_edges,
        'components': len(comps),
        'largest': comps[0].size if comps else 0,
        'diameter_largest': comps[0].diameter if comps else 0,
        'degree_counts': {str(int(k)): int(c) for k, c in zip(degrees, counts)},
    }
    click.echo(json.dumps(summary, sort_keys=True))


@cli.command()
@click.option('--mode', type=click.Choice(limit_processes.PROCESSES), default='bm_parabolic', show_default=True)
@tau_option
@cf_option
@lambda_option
@click.option('--mu', type=float, default=1.0, show_default=True)
@click.option('--eta', type=float, default=1.0, show_default=True)
@click.option('--K', 'K', type=int, default=None, help='Number of jump sizes theta_i')
@click.option('--dt', type=float, default=1e-3, show_default=True)
@click.option('--T', 'T', type=float, default=20.0, show_default=True)
@seed_option
@out_option
@telemetry.trace('limits')
def limits(mode, tau, cf, lam, mu, eta, K, dt, T, seed, out):
    """Simulate a limit process; writes the path CSV and its ordered excursions"""
    out = _require_out(out)
    seed, rng = _resolve_seed(seed)
    theta = None
    if mode != 'bm_parabolic':
        K = K or int(load_settings()['truncation_K'])
        theta = limit_processes.ThetaSequence.power_law(1.0 / (tau - 1.0), K, mu=mu, cF=cf)
    params = limit_processes.ExcursionLawParams(process=mode, mu=mu, eta=eta, lam=lam, theta=theta, T=T, dt=dt,
                                                mark_regime='beta_over_mu' if mode == 'bm_parabolic' else 'unit')
    path = limit_processes.simulate_path(params, rng)
    exc = limit_processes.order_excursions(
        limit_processes.marks(path, params.mark_regime, rng, mu=mu, theta=theta))
    formats.write_path_csv(out, path)
    exc_path = out.with_name(out.stem + '.excursions.csv')
    formats.write_excursion_csv(exc_path, exc)
    click.echo(f'{len(exc)} excursions, longest {exc.lengths[0] if len(exc) else 0:.4g} -> {exc_path}')


@cli.command(name='coalescent')
@click.option('--mode', type=click.Choice(['mc', 'amc', 'dynamic', 'modified']), default='mc', show_default=True)
@tau_option
@n_option
@cf_option
@lambda_option
@click.option('--T', 'T', type=float, default=1.0, show_default=True, help='Time horizon')
@seed_option
@out_option
@telemetry.trace('coalescent')
def coalescent_cmd(mode, tau, n, cf, lam, T, seed, out):
    """Run a coalescent or a dynamic construction and write its event log"""
    out = _require_out(out)
    seed, rng = _resolve_seed(seed)
    if mode in ('mc', 'amc'):
        w = build_power_law_weights(tau, n, cf).weights
        masses = w / math.sqrt(float(np.dot(w, w)))
        if mode == 'mc':
            traj = coalescent.simulate_mc(masses, 1.0, T, rng)
        else:
            traj = coalescent.simulate_amc(masses, None, 1.0, 1.0, T, rng)
        events = traj.events
        click.echo(f'{len(events)} events, largest mass {traj.ordered_masses()[0]:.4g}')
    else:
        d = _power_law(tau, n, cf)
        if mode == 'dynamic':
            traj, _ = coalescent.dynamic_construction(d, T, rng)
        else:
            scal = scaling_constants(tau, n)
            nu = criticality(d, scal).nu_n
            t_start = coalescent.time_map(nu, scal.c_n, lam) if nu > 1 else 0.0
            traj = coalescent.modified_process(d, t_start, t_start + T, rng)
        events = traj.events
        click.echo(f'{len(events)} events, {traj.final.s1} open half-edges, {traj.final.bad_edges} bad edges')
    formats.write_event_log(out, events)


@cli.command()
@click.option('--kernel', type=click.Choice(limit_graph.KERNEL_KINDS), default='grg', show_default=True)
@click.option('--tau', type=float, default=2.5, show_default=True, help='Power-law exponent in (2, 3)')
@cf_option
@click.option('--lambda', 'lam', type=float, default=0.3, show_default=True)
@click.option('--K', 'K', type=int, default=None, help='Hub truncation')
@click.option('--threads', type=int, default=1, show_default=True)
@seed_option
@out_option
@telemetry.trace('limitgraph')
def limitgraph(kernel, tau, cf, lam, K, threads, seed, out):
    """Sample the truncated hub limit graph; writes W (ranked) and the lambda matrix"""
    out = _require_out(out)
    seed, rng = _resolve_seed(seed)
    K = K or int(load_settings()['truncation_K'])
    hub = limit_graph.HubKernel.from_tau(kernel, tau, cF=cf)
    lambdas = limit_graph.lambda_matrix(K, lam, hub, workers=threads)
    G = limit_graph.sample_g_infty(K, lam, hub, rng, lambdas=lambdas)
    weights = limit_graph.limit_weights(G)
    formats.write_vector_csv(out, weights, name='W')
    formats.write_matrix_csv(out.with_name(out.stem + '.lambda.csv'), lambdas)
    click.echo(f'{G.edge_count} edges among {K} hubs, W_(1)={weights[0]:.6g}')


@cli.command()
@click.option('--spec', 'spec_path', required=True, help='ExperimentSpec file (JSON or TOML)')
@click.option('--threads', type=int, default=1, show_default=True)
@click.option('--replicates', type=int, default=None, help='Override the spec replicate count')
@seed_option
@out_option
@telemetry.trace('experiment')
def experiment(spec_path, threads, replicates, seed, out):
    """Run an experiment spec; writes CSV results and a JSON manifest"""
    out = _require_out(out)
    spec = harness.load_experiment_spec(spec_path)
    overrides = {}
    if replicates is not None:
        overrides['replicates'] = replicates
    if seed is not None:
        overrides['seed'] = seed
    if overrides:
        spec = harness.ExperimentSpec(**{**spec.as_dict(), **overrides})
    click.echo(f'seed: {spec.seed}')
    result = harness.run_experiment(spec, parallelism=threads)
    harness.write_results(result, out)
    click.echo(f'{len(result.completed)}/{len(result.records)} replicates, {result.failure_count} failed -> {out}')


def dispatch(argv=None) -> int:
    """Run the CLI; 0 on success, 1 on usage errors, 2 on runtime failures."""
    try:
        cli.main(args=argv, prog_name='critgraph', standalone_mode=False)
    except click.UsageError as e:
        click.echo(f'usage error: {e.format_message()}', err=True)
        return 1
    except click.Abort:
        click.echo('aborted', err=True)
        return 1
    except LabError as e:
        click.echo(f'error: {e.one_line()}', err=True)
        return 2
    except Exception as e:
        click.echo(f'error: {type(e).__name__}: {e}', err=True)
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(dispatch())

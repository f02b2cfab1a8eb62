import json

from click.testing import CliRunner

from critgraph import formats
from scripts.cli import cli, dispatch

SPEC = """
[experiment]
model = "cm"
tau = 3.5
n_grid = [200, 300]
replicates = 2
seed = 5
outputs = ["sizes", "surplus", "diameter"]
"""


def _last_json(text):
    return json.loads(text.strip().splitlines()[-1])


def test_help_lists_commands():
    result = CliRunner().invoke(cli, ['--help'])
    assert result.exit_code == 0
    for name in ('gen', 'percolate', 'explore', 'stats', 'limits', 'coalescent', 'limitgraph', 'experiment'):
        assert name in result.output


def test_gen_writes_edges_and_sidecar(tmp_path, capsys):
    out = tmp_path / 'g.edges'
    assert dispatch(['gen', '--model', 'cm', '--tau', '3.5', '--n', '300', '--seed', '7', '--out', str(out)]) == 0
    assert 'seed: 7' in capsys.readouterr().out
    meta = json.loads(formats.sidecar_path(out).read_text())
    assert meta['n'] == 300 and meta['seed'] == 7 and meta['model'] == 'cm'
    assert formats.read_edge_list(out).degrees().tolist() == meta['degrees']


def test_gen_is_reproducible(tmp_path):
    first, second = tmp_path / 'a.edges', tmp_path / 'b.edges'
    for path in (first, second):
        assert dispatch(['gen', '--model', 'ecm', '--n', '200', '--seed', '3', '--out', str(path)]) == 0
    assert first.read_text() == second.read_text()


def test_stats_reports_degree_counts(tmp_path, capsys):
    edges = tmp_path / 'g.edges'
    table = tmp_path / 'components.csv'
    dispatch(['gen', '--n', '200', '--seed', '1', '--out', str(edges)])
    capsys.readouterr()
    assert dispatch(['stats', '--in', str(edges), '--out', str(table)]) == 0
    summary = _last_json(capsys.readouterr().out)
    degrees = json.loads(formats.sidecar_path(edges).read_text())['degrees']
    assert sum(summary['degree_counts'].values()) == summary['n'] == 200
    assert summary['degree_counts'][str(max(degrees))] == degrees.count(max(degrees))
    rows = formats.read_csv(table)
    assert int(rows[0]['size']) == summary['largest']


def test_bond_percolation_of_a_file(tmp_path):
    host = tmp_path / 'g.edges'
    out = tmp_path / 'gp.edges'
    dispatch(['gen', '--n', '200', '--seed', '2', '--out', str(host)])
    assert dispatch(['percolate', '--mode', 'bond', '--p', '0.5', '--in', str(host), '--seed', '2',
                     '--out', str(out)]) == 0
    meta = json.loads(formats.sidecar_path(out).read_text())
    assert meta['p'] == 0.5 and meta['seed'] == 2
    assert formats.read_edge_list(out).num_edges <= formats.read_edge_list(host).num_edges


def test_degree_based_percolation_rejects_a_realized_graph(tmp_path, capsys):
    host = tmp_path / 'g.edges'
    dispatch(['gen', '--n', '100', '--seed', '2', '--out', str(host)])
    code = dispatch(['percolate', '--mode', 'janson', '--in', str(host), '--out', str(tmp_path / 'x.edges')])
    assert code == 1
    assert 'usage error' in capsys.readouterr().err


def test_degree_based_percolation_from_power_law(tmp_path):
    out = tmp_path / 'f.edges'
    assert dispatch(['percolate', '--mode', 'fountoulakis', '--n', '300', '--seed', '4', '--out', str(out)]) == 0
    assert json.loads(formats.sidecar_path(out).read_text())['method'] == 'fountoulakis'


def test_explore_writes_walk(tmp_path):
    out = tmp_path / 'walk.csv'
    assert dispatch(['explore', '--mode', 'unit', '--n', '200', '--seed', '5', '--out', str(out)]) == 0
    rows = formats.read_csv(out)
    assert rows[0]['event'] == 'start'
    assert rows[1]['event'] == 'root'
    assert {r['event'] for r in rows[1:]} <= {'root', 'new', 'loop', 'surplus'}


def test_limits_write_path_and_excursions(tmp_path):
    out = tmp_path / 'path.csv'
    assert dispatch(['limits', '--mode', 'bm_parabolic', '--T', '2', '--dt', '0.01', '--seed', '6',
                     '--out', str(out)]) == 0
    assert len(formats.read_csv(out)) == 201
    assert (tmp_path / 'path.excursions.csv').exists()


def test_coalescent_event_log(tmp_path):
    out = tmp_path / 'events.csv'
    assert dispatch(['coalescent', '--mode', 'mc', '--n', '50', '--T', '1', '--seed', '8', '--out', str(out)]) == 0
    assert all(r['type'] == 'merge' for r in formats.read_csv(out))


def test_limitgraph_outputs(tmp_path):
    out = tmp_path / 'w.csv'
    assert dispatch(['limitgraph', '--K', '3', '--seed', '9', '--out', str(out)]) == 0
    weights = [float(r['W']) for r in formats.read_csv(out)]
    assert weights == sorted(weights, reverse=True)
    assert len((tmp_path / 'w.lambda.csv').read_text().splitlines()) == 4


def test_experiment_output_does_not_depend_on_threads(tmp_path):
    spec = tmp_path / 'spec.toml'
    spec.write_text(SPEC)
    for threads in ('1', '2'):
        assert dispatch(['experiment', '--spec', str(spec), '--threads', threads,
                         '--out', str(tmp_path / f't{threads}')]) == 0
    for name in ('replicates.csv', 'summary.csv'):
        assert (tmp_path / 't1' / name).read_text() == (tmp_path / 't2' / name).read_text()
    manifest = json.loads((tmp_path / 't1' / 'manifest.json').read_text())
    assert manifest['seed'] == 5


def test_experiment_seed_override(tmp_path):
    spec = tmp_path / 'spec.toml'
    spec.write_text(SPEC)
    assert dispatch(['experiment', '--spec', str(spec), '--seed', '99', '--replicates', '1',
                     '--out', str(tmp_path / 'o')]) == 0
    manifest = json.loads((tmp_path / 'o' / 'manifest.json').read_text())
    assert manifest['seed'] == 99 and manifest['replicates_completed'] == 2


def test_exit_codes(tmp_path, capsys):
    assert dispatch(['gen', '--n', '100']) == 1
    assert dispatch(['gen', '--model', 'nr_q', '--out', str(tmp_path / 'q.edges')]) == 1
    assert dispatch(['gen', '--tau', '1.5', '--out', str(tmp_path / 'bad.edges')]) == 2
    assert 'error:' in capsys.readouterr().err
    assert dispatch(['experiment', '--spec', str(tmp_path / 'missing.toml'), '--out', str(tmp_path)]) == 2

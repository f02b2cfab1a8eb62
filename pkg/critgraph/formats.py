"""Plain-text result formats: edge lists, degree files, walk/path/excursion/event CSVs.

Every writer goes through ``write_atomic``: a temporary file in the target
directory, then ``os.replace``.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .degree_models import DegreeSequence, degree_sequence_from_file, to_json, to_lines
from .error_handling import LabValidationError
from .graphs import Graph, MultiGraph
from .limit_processes import reflect

PathLike = str | os.PathLike


def write_atomic(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    return write_atomic(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + '\n')


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f'not JSON serializable: {type(obj).__name__}')


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(v) for v in row])
    return buf.getvalue()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    return write_atomic(path, csv_text(header, rows))


def write_dict_rows(path: PathLike, rows: List[Dict[str, Any]], header: Optional[Sequence[str]] = None) -> Path:
    header = list(header or (rows[0].keys() if rows else []))
    return write_csv(path, header, ([row.get(k, '') for k in header] for row in rows))


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, newline='', encoding='utf-8') as fh:
        return list(csv.DictReader(fh))


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + '.json')


def write_edge_list(path: PathLike, graph: Graph, sidecar: Optional[Dict[str, Any]] = None) -> Path:
    """'u v' per edge plus a JSON sidecar carrying n and the degrees."""
    edges = graph.edge_array()
    write_atomic(path, ''.join(f'{int(u)} {int(v)}\n' for u, v in edges))
    meta = {'n': graph.n, 'edges': int(edges.shape[0]), 'kind': type(graph).__name__,
            'degrees': [int(k) for k in graph.degrees()]}
    meta.update(sidecar or {})
    write_json(sidecar_path(path), meta)
    return Path(path)


def read_edge_list(path: PathLike) -> MultiGraph:
    """Read an edge list back as a multigraph; n comes from the sidecar when present."""
    path = Path(path)
    try:
        rows = [line.split() for line in path.read_text(encoding='utf-8').splitlines() if line.strip()]
        edges = np.array([[int(u), int(v)] for u, v in rows], dtype=np.int64).reshape(-1, 2)
    except (OSError, ValueError) as e:
        raise LabValidationError(f'cannot read edge list {path}', original_exception=e)
    meta_file = sidecar_path(path)
    if meta_file.exists():
        n = int(json.loads(meta_file.read_text(encoding='utf-8'))['n'])
    else:
        n = int(edges.max()) + 1 if edges.size else 0
    return MultiGraph.from_edge_list(n, edges)


def write_degrees(path: PathLike, d: DegreeSequence) -> Path:
    text = to_json(d) + '\n' if Path(path).suffix == '.json' else to_lines(d)
    return write_atomic(path, text)


def read_degrees(path: PathLike) -> DegreeSequence:
    return degree_sequence_from_file(path)


def write_walk_csv(path: PathLike, walk) -> Path:
    events = ('start',) + tuple(walk.events)
    return write_csv(path, ('stage', 'S', 'event'),
                     ((k, int(s), events[k]) for k, s in enumerate(walk.values)))


def write_path_csv(path: PathLike, limit_path) -> Path:
    refl = limit_path.values if limit_path.reflected else reflect(limit_path).values
    return write_csv(path, ('t', 'S', 'refl'), zip(limit_path.times, limit_path.values, refl))


def write_excursion_csv(path: PathLike, exc) -> Path:
    marks = exc.marks if exc.marks.size == exc.lengths.size else np.zeros(exc.lengths.size, dtype=np.int64)
    return write_csv(path, ('rank', 'length', 'area', 'marks'),
                     ((k, length, area, int(m))
                      for k, (length, area, m) in enumerate(zip(exc.lengths, exc.areas, marks), 1)))


def write_event_log(path: PathLike, events) -> Path:
    return write_csv(path, ('time', 'type', 'i', 'j'), ((e.time, e.kind, e.i, e.j) for e in events))


def write_component_table(path: PathLike, rows: List[Dict[str, Any]]) -> Path:
    return write_dict_rows(path, rows, header=('rank', 'size', 'edges', 'surplus', 'diameter', 'weight'))


def write_matrix_csv(path: PathLike, matrix: np.ndarray) -> Path:
    """Square matrix with 1-based hub indices as the header row and first column."""
    K = matrix.shape[0]
    header = ['i'] + [str(j) for j in range(1, K + 1)]
    return write_csv(path, header, ([i + 1] + list(matrix[i]) for i in range(K)))


def write_vector_csv(path: PathLike, values: Sequence[float], name: str = 'value') -> Path:
    return write_csv(path, ('rank', name), ((k, v) for k, v in enumerate(values, 1)))

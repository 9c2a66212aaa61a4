import json
import os

import numpy as np

FLOAT_FORMAT = "%.17g"


def ensure_folder(path):
    """Create folder if it doesn't exist."""
    os.makedirs(path, exist_ok=True)
    return path


def get_unique_dirname(parent, name):
    """``name`` inside ``parent``, with _1, _2, ... appended while it is taken."""
    candidate = name
    counter = 1
    while os.path.exists(os.path.join(parent, candidate)):
        candidate = f"{name}_{counter}"
        counter += 1
    return candidate


def make_run_dir(output_dir, scenario, seed):
    ensure_folder(output_dir)
    name = get_unique_dirname(output_dir, f"{scenario}-seed{seed}")
    return ensure_folder(os.path.join(output_dir, name))


# ---------------- CSV ----------------
def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def _expand(name, column):
    """A complex column becomes <name>_re and <name>_im."""
    column = np.asarray(column)
    if np.iscomplexobj(column):
        return [(f"{name}_re", column.real), (f"{name}_im", column.imag)]
    return [(name, column)]


def write_table(path, columns, seed, scenario):
    """Write ``columns`` (name -> 1-D sequence) as CSV under a ``# seed=... scenario=...`` line."""
    expanded = [pair for name, column in columns.items() for pair in _expand(name, column)]
    lengths = {len(column) for _, column in expanded}
    if len(lengths) > 1:
        raise ValueError(f"columns of {path} have different lengths: {sorted(lengths)}")
    rows = len(expanded[0][1]) if expanded else 0
    table = np.array(
        [[_format(column[i]) for _, column in expanded] for i in range(rows)], dtype=object
    ).reshape(rows, len(expanded))
    header = f"# seed={seed} scenario={scenario}\n" + ",".join(name for name, _ in expanded)
    np.savetxt(path, table, fmt="%s", delimiter=",", header=header, comments="")
    return path


def read_table(path):
    """Header names and string rows of a table written by ``write_table``."""
    with open(path) as f:
        lines = [line.rstrip("\n") for line in f]
    names = lines[1].split(",")
    return names, [line.split(",") for line in lines[2:] if line]


# ---------------- JSON ----------------
def _to_builtin(value):
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return np.stack([value.real, value.imag], axis=-1).tolist()
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def write_json(path, data):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=_to_builtin)
    return path


def read_json(path):
    with open(path) as f:
        return json.load(f)

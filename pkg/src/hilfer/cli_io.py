import dataclasses
import json
import os
import re
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import click
import numpy as np
import yaml
from semantic_version import SimpleSpec, Version  # type: ignore

try:
    from .artifact_utils import (
        read_samples_csv,
        run_dir,
        save_json_document,
        signature_for_json,
        write_samples_csv,
        write_trajectory_csv,
    )
    from .certifier import Certificate, SamplingBudget, check_conditions, estimate_constants
    from .errors import HilferError, InvalidParams, ParseError, ValidationError
    from .fracops import Grid, PsiMap, SampledFn, hilfer_derivative, rl_integral
    from .gronwall import verify as verify_strong
    from .mlf import DEFAULT_ML_TOL, MLParams, ml_eval
    from .picard import (
        DelayKind,
        DelaySpec,
        NonlinKind,
        NonlinSpec,
        NonlocalSpec,
        Numerics,
        Problem,
        solve_mild,
        weighted_norm,
    )
    from .solution_ops import Generator, solve_linear
except ImportError:
    from artifact_utils import (
        read_samples_csv,
        run_dir,
        save_json_document,
        signature_for_json,
        write_samples_csv,
        write_trajectory_csv,
    )
    from certifier import Certificate, SamplingBudget, check_conditions, estimate_constants
    from errors import HilferError, InvalidParams, ParseError, ValidationError
    from fracops import Grid, PsiMap, SampledFn, hilfer_derivative, rl_integral
    from gronwall import verify as verify_strong
    from mlf import DEFAULT_ML_TOL, MLParams, ml_eval
    from picard import (
        DelayKind,
        DelaySpec,
        NonlinKind,
        NonlinSpec,
        NonlocalSpec,
        Numerics,
        Problem,
        solve_mild,
        weighted_norm,
    )
    from solution_ops import Generator, solve_linear

FORMAT_VERSION = "1.0.0"
SUPPORTED_FORMATS = SimpleSpec(">=1.0.0,<2.0.0")
_LINE_PATTERN = re.compile(r"line (\d+)")


# ---------------------------------------------------------------- console output

def _supports_color() -> bool:
    if os.environ.get("NO_COLOR"):
        return False
    try:
        return sys.stderr.isatty()
    except Exception:
        return False


def _c(code: str, text: str) -> str:
    """Wrap text with ANSI color if supported."""
    if not _supports_color():
        return text
    return f"\033[{code}m{text}\033[0m"


def _strip_ansi(text: str) -> str:
    return re.sub("\x1b\\[[0-9;]*m", "", text or "")


def _render_table(headers: List[str], rows: List[List[str]]) -> None:
    cols = len(headers)
    widths = [len(_strip_ansi(h)) for h in headers]
    for row in rows:
        for j in range(cols):
            cell = row[j] if j < len(row) else ""
            widths[j] = max(widths[j], len(_strip_ansi(str(cell))))
    border = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
    header_cells = [
        f" {_c('1;37', headers[j])}{' ' * (widths[j] - len(_strip_ansi(headers[j])))} "
        for j in range(cols)
    ]
    click.echo(border, err=True)
    click.echo("|" + "|".join(header_cells) + "|", err=True)
    click.echo(border, err=True)
    for row in rows:
        cells = []
        for j in range(cols):
            cell = str(row[j]) if j < len(row) else ""
            cells.append(f" {cell}{' ' * (widths[j] - len(_strip_ansi(cell)))} ")
        click.echo("|" + "|".join(cells) + "|", err=True)
    click.echo(border, err=True)


def _verdict(passed: bool) -> str:
    return _c("1;32", "PASS") if passed else _c("1;31", "FAIL")


# ---------------------------------------------------------------- problem files

def _load_document(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ParseError(f"No se encontró el archivo de problema: {path}", path=str(path))
    text = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            document = json.loads(text)
        elif suffix in (".yaml", ".yml"):
            document = yaml.safe_load(text)
        else:
            document = tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=str(path), line=exc.lineno) from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(exc), path=str(path), line=mark.line + 1 if mark else None) from exc
    except tomllib.TOMLDecodeError as exc:
        match = _LINE_PATTERN.search(str(exc))
        raise ParseError(str(exc), path=str(path), line=int(match.group(1)) if match else None) from exc
    if not isinstance(document, dict):
        raise ParseError("problem file must hold a table of sections", path=str(path))
    return document


class _Reader:
    """Typed access to the sections of a problem document, naming the field on failure."""

    def __init__(self, document: Dict[str, Any], path: str) -> None:
        self.document = document
        self.path = path

    def section(self, name: str, required: bool = True) -> Dict[str, Any]:
        value = self.document.get(name)
        if value is None:
            if required:
                raise ParseError(f"missing section [{name}]", path=self.path, field=name)
            return {}
        if not isinstance(value, dict):
            raise ParseError(f"[{name}] must be a table", path=self.path, field=name)
        return value

    def _get(self, section: str, key: str, default: Any, required: bool) -> Any:
        table = self.section(section, required=required)
        if key not in table:
            if required:
                raise ParseError(f"missing key {section}.{key}", path=self.path, field=f"{section}.{key}")
            return default
        return table[key]

    def number(self, section: str, key: str, default: Any = None, required: bool = False) -> Any:
        value = self._get(section, key, default, required)
        if value is default:
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"{section}.{key} must be a number", path=self.path, field=f"{section}.{key}")
        return float(value)

    def integer(self, section: str, key: str, default: int) -> int:
        value = self._get(section, key, default, False)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError(f"{section}.{key} must be an integer", path=self.path, field=f"{section}.{key}")
        return value

    def array(self, section: str, key: str, default: Any = None, required: bool = False) -> Any:
        value = self._get(section, key, default, required)
        if value is default:
            return value
        try:
            return np.asarray(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(
                f"{section}.{key} must be numeric (rows of equal length)",
                path=self.path,
                field=f"{section}.{key}",
            ) from exc

    def text(self, section: str, key: str, default: str) -> str:
        value = self._get(section, key, default, False)
        if not isinstance(value, str):
            raise ParseError(f"{section}.{key} must be a string", path=self.path, field=f"{section}.{key}")
        return value


def _check_format(reader: _Reader) -> None:
    raw = reader.section("meta", required=False).get("format")
    if raw is None:
        return
    try:
        version = Version.coerce(str(raw))
    except ValueError as exc:
        raise ParseError(f"invalid format version {raw!r}", path=reader.path, field="meta.format") from exc
    if version not in SUPPORTED_FORMATS:
        raise ParseError(
            f"format {version} is not supported (expected {SUPPORTED_FORMATS})",
            path=reader.path,
            field="meta.format",
        )


def _table(rows: Any, field: str, path: str) -> tuple:
    array = np.asarray(rows, dtype=float)
    if array.ndim != 2 or array.shape[1] != 2:
        raise ParseError(f"{field} must be a list of [x, y] pairs", path=path, field=field)
    return tuple((float(x), float(y)) for x, y in array)


def _resolve(base: Path, value: str) -> Path:
    candidate = Path(value).expanduser()
    return candidate if candidate.is_absolute() else base.parent / candidate


def _nonlinearity(reader: _Reader, dim: int, base: Path) -> NonlinSpec:
    kind_name = reader.text("nonlinearity", "kind", "zero")
    try:
        kind = NonlinKind(kind_name)
    except ValueError as exc:
        raise ValidationError("nonlinearity.kind", f"unknown kind {kind_name!r}") from exc
    offset = reader.array("nonlinearity", "offset")
    options: Dict[str, Any] = {"offset": tuple(float(x) for x in offset.reshape(-1)) if offset is not None else ()}
    if kind is NonlinKind.LINEAR:
        matrix = reader.array("nonlinearity", "matrix", required=True)
        if matrix.ndim == 0:
            matrix = float(matrix) * np.eye(dim)
        options["matrix"] = tuple(tuple(float(x) for x in row) for row in np.atleast_2d(matrix))
    elif kind is NonlinKind.SINE:
        options["scale"] = reader.number("nonlinearity", "scale", required=True)
    elif kind is NonlinKind.POLYNOMIAL:
        options["coeffs"] = tuple(float(x) for x in reader.array("nonlinearity", "coeffs", required=True).reshape(-1))
    elif kind is NonlinKind.TABULATED:
        options["table"] = _tabulated(reader, "nonlinearity", base)
    return NonlinSpec(kind=kind, **options)


def _tabulated(reader: _Reader, section: str, base: Path) -> tuple:
    table = reader.section(section)
    if "file" in table:
        source = _resolve(base, str(table["file"]))
        try:
            rows = np.loadtxt(source, comments="#", ndmin=2, delimiter="," if source.suffix == ".csv" else None)
        except (OSError, ValueError) as exc:
            raise ParseError(f"cannot read {source}: {exc}", path=reader.path, field=f"{section}.file") from exc
        return _table(rows, f"{section}.file", reader.path)
    if "table" not in table:
        raise ParseError(f"missing key {section}.table", path=reader.path, field=f"{section}.table")
    return _table(table["table"], f"{section}.table", reader.path)


def _delay(reader: _Reader, base: Path) -> DelaySpec:
    kind_name = reader.text("delay", "kind", "identity")
    try:
        kind = DelayKind(kind_name)
    except ValueError as exc:
        raise ValidationError("delay.kind", f"unknown kind {kind_name!r}") from exc
    if kind is DelayKind.PROPORTIONAL:
        return DelaySpec(kind, q=reader.number("delay", "q", required=True))
    if kind is DelayKind.LAG:
        return DelaySpec(kind, lag=reader.number("delay", "lag", required=True))
    if kind is DelayKind.TABULATED:
        return DelaySpec(kind, table=_tabulated(reader, "delay", base))
    return DelaySpec(kind)


def _nonlocal(reader: _Reader, dim: int) -> NonlocalSpec:
    table = reader.section("nonlocal", required=False)
    anchors = table.get("anchors", [])
    coefficients = table.get("coefficients", [])
    if not isinstance(anchors, list) or not isinstance(coefficients, list):
        raise ParseError("nonlocal.anchors and nonlocal.coefficients must be lists", path=reader.path, field="nonlocal")
    try:
        return NonlocalSpec.build([float(t) for t in anchors], coefficients, dim)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, HilferError):
            raise
        raise ParseError(str(exc), path=reader.path, field="nonlocal") from exc


def problem_from_document(document: Dict[str, Any], path: str = "<document>") -> Problem:
    reader = _Reader(document, path)
    base = Path(path)
    _check_format(reader)
    matrix = reader.array("generator", "matrix", required=True)
    if matrix.ndim == 0:
        matrix = matrix.reshape(1, 1)
    if matrix.ndim != 2:
        raise ValidationError("generator.matrix", "matrix rows must have equal length")
    gen = Generator.from_array(matrix)
    xi0 = reader.array("initial", "xi0", required=True).reshape(-1)
    numerics = Numerics(
        grid_n=reader.integer("numerics", "grid_n", Numerics.grid_n),
        tol=reader.number("numerics", "tol", Numerics.tol),
        max_iter=reader.integer("numerics", "max_iter", Numerics.max_iter),
        ml_tol=reader.number("numerics", "ml_tol", Numerics.ml_tol),
        seed=reader.integer("numerics", "seed", Numerics.seed),
        budget=reader.integer("numerics", "budget", Numerics.budget),
    )
    return Problem(
        gen=gen,
        alpha=reader.number("orders", "alpha", required=True),
        beta=reader.number("orders", "beta", required=True),
        t0=reader.number("horizon", "t0", 0.0),
        a=reader.number("horizon", "a", required=True),
        xi0=tuple(float(x) for x in xi0),
        nonlin=_nonlinearity(reader, gen.dim, base),
        delay=_delay(reader, base),
        nonlocal_=_nonlocal(reader, gen.dim),
        ball_radius=reader.number("initial", "ball_radius", 1.0),
        numerics=numerics,
    )


def parse_problem(path: Any) -> Problem:
    """Read and validate a TOML, JSON or YAML problem file."""
    path = Path(path)
    return problem_from_document(_load_document(path), str(path))


def canonical_problem_document(problem: Problem) -> Dict[str, Any]:
    nonlin = problem.nonlin
    nonlinearity: Dict[str, Any] = {"kind": nonlin.kind.value}
    if nonlin.kind is NonlinKind.LINEAR:
        nonlinearity["matrix"] = [list(row) for row in nonlin.matrix]
    elif nonlin.kind is NonlinKind.SINE:
        nonlinearity["scale"] = nonlin.scale
    elif nonlin.kind is NonlinKind.POLYNOMIAL:
        nonlinearity["coeffs"] = list(nonlin.coeffs)
    elif nonlin.kind is NonlinKind.TABULATED:
        nonlinearity["table"] = [list(row) for row in nonlin.table]
    if nonlin.offset:
        nonlinearity["offset"] = list(nonlin.offset)

    delay = problem.delay
    delay_doc: Dict[str, Any] = {"kind": delay.kind.value}
    if delay.kind is DelayKind.PROPORTIONAL:
        delay_doc["q"] = delay.q
    elif delay.kind is DelayKind.LAG:
        delay_doc["lag"] = delay.lag
    elif delay.kind is DelayKind.TABULATED:
        delay_doc["table"] = [list(row) for row in delay.table]

    return {
        "meta": {"format": FORMAT_VERSION},
        "orders": {"alpha": problem.alpha, "beta": problem.beta},
        "generator": {"matrix": [list(row) for row in problem.gen.matrix]},
        "horizon": {"t0": problem.t0, "a": problem.a},
        "initial": {"xi0": list(problem.xi0), "ball_radius": problem.ball_radius},
        "nonlinearity": nonlinearity,
        "delay": delay_doc,
        "nonlocal": {
            "anchors": list(problem.nonlocal_.anchors),
            "coefficients": [[list(row) for row in c] for c in problem.nonlocal_.coefficients],
        },
        "numerics": dataclasses.asdict(problem.numerics),
    }


# ---------------------------------------------------------------- commands

class CommandFailure(click.ClickException):
    """ClickException carrying the exit status of a HilferError."""

    def __init__(self, error: HilferError) -> None:
        super().__init__(str(error))
        self.exit_code = error.exit_status
        self.kind = error.kind

    def show(self, file: Any = None) -> None:
        click.echo(f"[Error]: {self.kind}: {self.format_message()}", err=True)


@contextmanager
def _guarded(directory: Path) -> Iterator[None]:
    try:
        yield
    except HilferError as exc:
        save_json_document(directory, "error", exc.to_document())
        raise CommandFailure(exc) from exc


def _with_overrides(
    problem: Problem,
    grid_n: Optional[int],
    tol: Optional[float],
    max_iter: Optional[int],
    seed: Optional[int],
) -> Problem:
    changes = {
        key: value
        for key, value in (("grid_n", grid_n), ("tol", tol), ("max_iter", max_iter), ("seed", seed))
        if value is not None
    }
    if not changes:
        return problem
    return dataclasses.replace(problem, numerics=dataclasses.replace(problem.numerics, **changes))


def _signed(problem: Problem, document: Dict[str, Any]) -> Dict[str, Any]:
    document["problem_signature"] = signature_for_json(canonical_problem_document(problem))
    return document


def _parse_floats(raw: str, option: str) -> List[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ValidationError(option.lstrip("-"), f"expected comma-separated numbers, got {raw!r}") from exc


def _psi_parameter(raw: str, arg: str) -> float:
    try:
        return float(arg)
    except ValueError as exc:
        raise InvalidParams(f"--psi {raw!r} needs a numeric parameter after ':'", field="psi") from exc


def _parse_psi(raw: str) -> PsiMap:
    kind, _, arg = raw.partition(":")
    kind = kind.strip().lower()
    if kind == "identity":
        return PsiMap.identity()
    if kind == "power":
        return PsiMap.power(_psi_parameter(raw, arg))
    if kind in ("log", "log-shift"):
        return PsiMap.log_shift(_psi_parameter(raw, arg))
    if kind in ("table", "user-tabulated"):
        if not arg:
            raise InvalidParams(f"--psi {raw!r} needs a file after ':'", field="psi")
        return PsiMap.from_file(Path(arg))
    raise InvalidParams(f"unknown psi {raw!r}", field="psi")


def problem_options(func: Any) -> Any:
    for decorator in reversed(
        (
            click.option("--problem", "problem_path", required=True, type=click.Path(dir_okay=False), help="Problem file (TOML, JSON or YAML)."),
            click.option("--out", default=None, help="Output directory (default: $HILFER_RUNS_ROOT/<command>)."),
            click.option("--grid-n", type=int, default=None, help="Override numerics.grid_n."),
            click.option("--tol", type=float, default=None, help="Override numerics.tol."),
            click.option("--max-iter", type=int, default=None, help="Override numerics.max_iter."),
            click.option("--seed", type=int, default=None, help="Override numerics.seed."),
        )
    ):
        func = decorator(func)
    return func


def _load(problem_path: str, grid_n, tol, max_iter, seed) -> Problem:
    problem = _with_overrides(parse_problem(problem_path), grid_n, tol, max_iter, seed)
    click.echo(f"[Info]: problem: {problem_path} (gamma={problem.gamma:g}, d={problem.dim})", err=True)
    return problem


def _solve_and_save(problem: Problem, directory: Path):
    grid = problem.grid()
    traj, diagnostics = solve_mild(problem, grid)
    write_trajectory_csv(directory / "trajectory.csv", traj)
    save_json_document(directory, "diagnostics", _signed(problem, diagnostics.to_document()))
    save_json_document(directory, "problem", canonical_problem_document(problem))
    return traj, diagnostics


def _certify_and_save(problem: Problem, directory: Path, r: Optional[float] = None):
    budget = SamplingBudget(lipschitz=problem.numerics.budget, delay=problem.numerics.budget, seed=problem.numerics.seed)
    cert = estimate_constants(problem, budget)
    report = check_conditions(cert, r)
    save_json_document(
        directory,
        "certificate",
        _signed(problem, {"certificate": cert.to_document(), "report": report.to_document()}),
    )
    return cert, report


@click.group(help="Solver y certificador de ecuaciones de evolución semilineales de Hilfer")
def cli() -> None:
    pass


@cli.command(help="Resuelve el problema no local por iteración de Picard")
@problem_options
def solve(problem_path: str, out: Optional[str], grid_n, tol, max_iter, seed) -> None:
    directory = run_dir("solve", out)
    with _guarded(directory):
        problem = _load(problem_path, grid_n, tol, max_iter, seed)
        traj, diagnostics = _solve_and_save(problem, directory)
    _render_table(
        ["Métrica", "Valor"],
        [
            ["Nodos", str(traj.grid.n + 1)],
            ["Iteraciones", str(diagnostics.iterations)],
            ["Residuo final", f"{diagnostics.residual:.3e}"],
            ["Norma ponderada", f"{weighted_norm(traj):.6g}"],
        ],
    )
    click.echo(str(directory / "trajectory.csv"))


@cli.command(help="Estima las constantes y verifica las condiciones de existencia")
@problem_options
@click.option("--r", "radius", type=float, default=None, help="Ball radius to test (default: initial.ball_radius).")
def certify(problem_path: str, out: Optional[str], grid_n, tol, max_iter, seed, radius) -> None:
    directory = run_dir("certify", out)
    with _guarded(directory):
        problem = _load(problem_path, grid_n, tol, max_iter, seed)
        cert, report = _certify_and_save(problem, directory, radius)
    rows = [[f"({item.name})", _verdict(item.passed), item.message] for item in report.conditions]
    _render_table(["Condición", "Estado", "Detalle"], rows)
    click.echo(f"[Info]: q={report.q:.6g} margin={report.margin:.6g} verdict={'PASS' if report.passed else 'FAIL'}", err=True)
    click.echo(repr(report.q))


@cli.command(help="Verifica la solución fuerte: incrementos, cota de Gronwall y residuos")
@problem_options
@click.option("--h-values", default=None, help="Comma-separated increments (default: a/64,a/32,a/16).")
@click.option("--c-tilde", type=float, default=1.0, show_default=True, help="Constant C~ of the Gronwall bound.")
@click.option("--layer", type=float, default=None, help="Boundary layer excluded from the strong residual.")
def verify(problem_path: str, out: Optional[str], grid_n, tol, max_iter, seed, h_values, c_tilde, layer) -> None:
    directory = run_dir("verify", out)
    with _guarded(directory):
        problem = _load(problem_path, grid_n, tol, max_iter, seed)
        steps = _parse_floats(h_values, "--h-values") if h_values else [problem.a / 64, problem.a / 32, problem.a / 16]
        traj, _ = _solve_and_save(problem, directory)
        cert, _ = _certify_and_save(problem, directory)
        report = verify_strong(traj, problem, cert, steps, C_tilde=c_tilde, layer=layer)
        save_json_document(directory, "strong_report", _signed(problem, report.to_document()))
    rows = [
        [f"{h:.6g}", f"{inc:.6g}", f"{bound:.6g}", _verdict(ok)]
        for h, inc, bound, ok in zip(report.h_values, report.increments, report.gronwall_rhs, report.dominated)
    ]
    _render_table(["h", "Incremento", "Cota", "Estado"], rows)
    _render_table(
        ["Métrica", "Valor"],
        [
            ["R~", f"{report.R_tilde:.6g}"],
            ["Residuo fuerte", f"{report.residual_eq:.3e}"],
            ["Residuo condición inicial", f"{report.residual_ic:.3e}"],
        ],
    )
    click.echo(str(directory / "strong_report.json"))


@cli.command(help="Resuelve el problema lineal por la fórmula de representación")
@problem_options
@click.option("--forcing", default=None, help="Constant forcing vector, comma-separated (default: 0).")
def linear(problem_path: str, out: Optional[str], grid_n, tol, max_iter, seed, forcing) -> None:
    directory = run_dir("linear", out)
    with _guarded(directory):
        problem = _load(problem_path, grid_n, tol, max_iter, seed)
        grid = problem.grid()
        source = None
        if forcing:
            values = _parse_floats(forcing, "--forcing")
            if len(values) not in (1, problem.dim):
                raise ValidationError("forcing", f"expected 1 or {problem.dim} values, got {len(values)}")
            source = SampledFn(grid, np.tile(np.resize(values, problem.dim), (grid.n + 1, 1)))
        traj = solve_linear(problem.gen, problem.alpha, problem.beta, problem.xi0, source, grid, problem.numerics.ml_tol)
        write_trajectory_csv(directory / "trajectory.csv", traj)
    click.echo(str(directory / "trajectory.csv"))


@cli.command(help="Evalúa la función de Mittag-Leffler E_{alpha,beta}(z)")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--z", "z_raw", required=True, help="Real or complex argument, e.g. -1.5 or 1+2j.")
@click.option("--tol", type=float, default=DEFAULT_ML_TOL, show_default=True)
@click.option("--out", default=None, help="Output directory (default: $HILFER_RUNS_ROOT/mlf).")
def mlf(alpha: float, beta: float, z_raw: str, tol: float, out: Optional[str]) -> None:
    directory = run_dir("mlf", out)
    with _guarded(directory):
        try:
            z: Any = float(z_raw)
        except ValueError:
            try:
                z = complex(z_raw.replace(" ", ""))
            except ValueError as exc:
                raise ValidationError("z", f"not a number: {z_raw!r}") from exc
        result = ml_eval(MLParams(alpha=alpha, beta=beta, tol=tol), z)
    if out:
        value = result.value
        document = {
            "alpha": alpha,
            "beta": beta,
            "z": z_raw,
            "value": [value.real, value.imag] if isinstance(value, complex) else value,
            "err_bound": result.err_bound,
            "terms_used": result.terms_used,
        }
        save_json_document(directory, "mlf", document)
    click.echo(repr(result.value))


@cli.command(help="Aplica la integral de Riemann-Liouville o la derivada de Hilfer a muestras CSV")
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False), help="CSV with columns t,f_1..f_d.")
@click.option("--op", type=click.Choice(["integral", "hilfer"]), default="integral", show_default=True)
@click.option("--mu", type=float, default=None, help="Order of the integral (--op integral).")
@click.option("--alpha", type=float, default=None, help="Order of the derivative (--op hilfer).")
@click.option("--beta", type=float, default=0.0, show_default=True, help="Type of the derivative (--op hilfer).")
@click.option("--psi", default="identity", show_default=True, help="identity | power:p | log:c | table:<file>")
@click.option("--scheme", type=click.Choice(["integrated", "composition"]), default="integrated", show_default=True)
@click.option("--out", default=None, help="Output directory (default: $HILFER_RUNS_ROOT/fracops).")
def fracops(input_path, op, mu, alpha, beta, psi, scheme, out) -> None:
    directory = run_dir("fracops", out)
    with _guarded(directory):
        times, values = read_samples_csv(Path(input_path))
        samples = SampledFn(Grid(tuple(times)), values)
        psi_map = _parse_psi(psi)
        if op == "integral":
            if mu is None:
                raise ValidationError("mu", "--mu is required for --op integral")
            result = rl_integral(samples, mu, psi_map)
        else:
            if alpha is None:
                raise ValidationError("alpha", "--alpha is required for --op hilfer")
            result = hilfer_derivative(samples, alpha, beta, psi_map, scheme=scheme)
        path = write_samples_csv(directory / "fracops.csv", samples.grid, result.values, prefix="g")
    click.echo(str(path))


if __name__ == "__main__":
    cli()

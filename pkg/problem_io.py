"""
Riesz-CG File Formats
JSON persistence of problems, CG traces, oracle results and bound reports,
CSV summaries, all written atomically
"""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from cg_solver import CgIterationRecord, CgOutcome, CgVerdict
from config import ToleranceConfig
from errors import ParseError, ProblemIOError, RieszCGError, ValidationError
from function_linalg import FunctionMatrix, FunctionVector, norm_A_pointwise
from oracle import OracleResult, ScalarTrace
from problems import Problem, validate_problem
from riesz_algebra import DEFAULT_TOLERANCE, AlgebraElement, MeasureSpace, make_space, sup_over_space

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRACE_FORMAT = "riesz-cg-trace"
ORACLE_FORMAT = "riesz-cg-oracle"
FORMAT_VERSION = 1


# === raw file access ===

def atomic_write_text(path: PathLike, text: str):
    """Write to a temp file in the target directory, then rename over path"""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
    except OSError as e:
        raise ProblemIOError(f"cannot write {path}: {e}")
    logger.debug("wrote %s", path)


def _dump_json(path: PathLike, payload: Dict[str, Any]):
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


def _read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ProblemIOError(f"cannot read {path}: {e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.pos)
    if not isinstance(data, dict):
        raise ValidationError("root", "expected a JSON object")
    return data


def write_csv(path: PathLike, rows: Sequence[Sequence[Any]]):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    atomic_write_text(path, buffer.getvalue())


# === field decoding ===

def _require(data: Dict[str, Any], key: str, where: str = "") -> Any:
    if key not in data:
        raise ValidationError(f"{where}{key}", "missing")
    return data[key]


def _array(value: Any, field: str, shape: Optional[tuple] = None) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(field, "expected nested lists of numbers")
    if shape is not None and arr.shape != shape:
        raise ValidationError(field, f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(field, "values must be finite")
    return arr


def _indices(value: Any, field: str) -> List[int]:
    if not isinstance(value, list) or not all(isinstance(i, int) for i in value):
        raise ValidationError(field, "expected a list of sample indices")
    return list(value)


def space_to_dict(space: MeasureSpace) -> Dict[str, Any]:
    data: Dict[str, Any] = {"weights": space.weights.tolist()}
    if space.labels is not None:
        data["labels"] = list(space.labels)
    return data


def space_from_dict(data: Any) -> MeasureSpace:
    if not isinstance(data, dict):
        raise ValidationError("space", "expected an object")
    weights = _array(_require(data, "weights", "space."), "space.weights")
    if weights.ndim != 1:
        raise ValidationError("space.weights", "expected a flat list")
    try:
        return make_space(weights, data.get("labels"))
    except (RieszCGError, ValueError) as e:
        raise ValidationError("space", str(e))


def _vector(value: Any, field: str, space: MeasureSpace, n: int) -> FunctionVector:
    return FunctionVector(space, _array(value, field, (n, space.m)))


def _element(value: Any, field: str, space: MeasureSpace) -> Optional[AlgebraElement]:
    if value is None:
        return None
    return AlgebraElement(space, _array(value, field, (space.m,)))


def _optional_array(value: Any, field: str, space: MeasureSpace) -> Optional[np.ndarray]:
    if value is None:
        return None
    return _array(value, field, (space.m,))


def _dimension(data: Dict[str, Any]) -> int:
    n = _require(data, "n")
    if not isinstance(n, int) or n < 1:
        raise ValidationError("n", "expected a positive integer")
    return n


# === problems ===

def problem_to_dict(problem: Problem) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "space": space_to_dict(problem.space),
        "n": problem.n,
        "A": problem.A.values.tolist(),
        "b": problem.b.values.tolist(),
    }
    if problem.x0 is not None:
        data["x0"] = problem.x0.values.tolist()
    data["metadata"] = dict(problem.metadata)
    return data


def problem_from_dict(data: Dict[str, Any], skip_validate: bool = False,
                      tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Problem:
    space = space_from_dict(_require(data, "space"))
    n = _dimension(data)
    A = FunctionMatrix(space, _array(_require(data, "A"), "A", (n, n, space.m)))
    b = _vector(_require(data, "b"), "b", space, n)
    x0 = _vector(data["x0"], "x0", space, n) if data.get("x0") is not None else None
    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ValidationError("metadata", "expected an object")
    problem = Problem(space=space, A=A, b=b, x0=x0, metadata=metadata)
    if not skip_validate:
        validate_problem(problem, tol)
    return problem


def save_problem(path: PathLike, problem: Problem):
    _dump_json(path, problem_to_dict(problem))


def load_problem(path: PathLike, skip_validate: bool = False,
                 tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Problem:
    """
    Raises:
        ProblemIOError: unreadable file
        ParseError: malformed JSON
        ValidationError: bad field (e.g. "A.symmetry")
    """
    return problem_from_dict(_read_json(path), skip_validate, tol)


def load_vector(path: PathLike, space: MeasureSpace, n: int) -> FunctionVector:
    """Starting vector file: {"x0": [[...], ...]} or the bare nested list"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ProblemIOError(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.pos)
    if isinstance(data, dict):
        data = _require(data, "x0")
    return _vector(data, "x0", space, n)


# === traces ===

def _optional_values(element: Optional[AlgebraElement]) -> Optional[List[float]]:
    return element.values.tolist() if element is not None else None


def record_to_dict(record: CgIterationRecord) -> Dict[str, Any]:
    return {
        "k": record.k,
        "residual_sup": record.residual_sup,
        "converged": record.converged,
        "alpha_feasible": record.alpha_feasible,
        "alpha": _optional_values(record.alpha),
        "beta": _optional_values(record.beta),
        "failure_set": list(record.failure_set),
        "alpha_witness": list(record.alpha_witness),
        "alpha_negative": list(record.alpha_negative),
        "curvature_scale": (record.curvature_scale.tolist()
                            if record.curvature_scale is not None else None),
        "x": record.x.values.tolist(),
        "r": record.r.values.tolist(),
        "p": record.p.values.tolist(),
    }


def record_from_dict(data: Dict[str, Any], space: MeasureSpace, n: int, where: str) -> CgIterationRecord:
    k = _require(data, "k", where)
    if not isinstance(k, int) or k < 0:
        raise ValidationError(f"{where}k", "expected a nonnegative integer")
    residual_sup = float(_array(_require(data, "residual_sup", where), f"{where}residual_sup"))
    return CgIterationRecord(
        k=k,
        x=_vector(_require(data, "x", where), f"{where}x", space, n),
        r=_vector(_require(data, "r", where), f"{where}r", space, n),
        p=_vector(_require(data, "p", where), f"{where}p", space, n),
        alpha=_element(data.get("alpha"), f"{where}alpha", space),
        beta=_element(data.get("beta"), f"{where}beta", space),
        alpha_feasible=bool(_require(data, "alpha_feasible", where)),
        residual_sup=residual_sup,
        failure_set=_indices(data.get("failure_set", []), f"{where}failure_set"),
        alpha_witness=_indices(data.get("alpha_witness", []), f"{where}alpha_witness"),
        alpha_negative=_indices(data.get("alpha_negative", []), f"{where}alpha_negative"),
        converged=bool(data.get("converged", False)),
        curvature_scale=_optional_array(data.get("curvature_scale"), f"{where}curvature_scale", space),
    )


def trace_to_dict(outcome: CgOutcome) -> Dict[str, Any]:
    first = outcome.records[0]
    return {
        "format": TRACE_FORMAT,
        "version": FORMAT_VERSION,
        "space": space_to_dict(first.x.space),
        "n": first.x.n,
        "verdict": outcome.verdict.value,
        "infeasible_step": outcome.infeasible_step,
        "witness_samples": list(outcome.witness_samples),
        "pointwise_solved_samples": list(outcome.pointwise_solved_samples),
        "records": [record_to_dict(r) for r in outcome.records],
    }


def trace_from_dict(data: Dict[str, Any]) -> CgOutcome:
    if data.get("format") != TRACE_FORMAT:
        raise ValidationError("format", f"expected {TRACE_FORMAT!r}")
    space = space_from_dict(_require(data, "space"))
    n = _dimension(data)
    try:
        verdict = CgVerdict(_require(data, "verdict"))
    except ValueError:
        raise ValidationError("verdict", f"unknown verdict {data['verdict']!r}")
    raw_records = _require(data, "records")
    if not isinstance(raw_records, list) or not raw_records:
        raise ValidationError("records", "expected a nonempty list")
    records = [record_from_dict(r, space, n, f"records[{i}].") for i, r in enumerate(raw_records)]
    for i, record in enumerate(records):
        if record.k != i:
            raise ValidationError(f"records[{i}].k", f"expected {i}, got {record.k}")
    infeasible_step = data.get("infeasible_step")
    if infeasible_step is not None and not isinstance(infeasible_step, int):
        raise ValidationError("infeasible_step", "expected an integer or null")
    return CgOutcome(
        verdict=verdict,
        records=records,
        final_x=records[-1].x,
        infeasible_step=infeasible_step,
        witness_samples=_indices(data.get("witness_samples", []), "witness_samples"),
        pointwise_solved_samples=_indices(data.get("pointwise_solved_samples", []),
                                          "pointwise_solved_samples"),
    )


def save_trace(path: PathLike, outcome: CgOutcome):
    _dump_json(path, trace_to_dict(outcome))


def load_trace(path: PathLike) -> CgOutcome:
    return trace_from_dict(_read_json(path))


def trace_csv_rows(outcome: CgOutcome, x_star: Optional[FunctionVector] = None,
                   A: Optional[FunctionMatrix] = None) -> List[List[Any]]:
    """k, residual_sup and, when x* and A are given, sup_X ||x* - x_k||_A"""
    with_error = x_star is not None and A is not None
    rows: List[List[Any]] = [["k", "residual_sup"] + (["error_A_sup"] if with_error else [])]
    for record in outcome.records:
        row: List[Any] = [record.k, record.residual_sup]
        if with_error:
            row.append(sup_over_space(norm_A_pointwise(x_star - record.x, A)))
        rows.append(row)
    return rows


# === oracle results ===

def oracle_to_dict(result: OracleResult) -> Dict[str, Any]:
    traces: List[Optional[Dict[str, Any]]] = []
    for trace in result.per_sample_traces:
        if trace is None:
            traces.append(None)
            continue
        traces.append({
            "converged": trace.converged,
            "breakdown": trace.breakdown,
            "alpha": trace.alpha.tolist(),
            "x": trace.x.tolist(),
            "r": trace.r.tolist(),
            "p": trace.p.tolist(),
        })
    return {
        "format": ORACLE_FORMAT,
        "version": FORMAT_VERSION,
        "space": space_to_dict(result.per_sample_solutions.space),
        "n": result.n,
        "solutions": result.per_sample_solutions.values.tolist(),
        "traces": traces,
    }


def _scalar_trace(data: Any, n: int, where: str) -> ScalarTrace:
    if not isinstance(data, dict):
        raise ValidationError(where, "expected an object or null")
    x = _array(_require(data, "x", f"{where}."), f"{where}.x")
    if x.ndim != 2 or x.shape[1] != n:
        raise ValidationError(f"{where}.x", f"expected rows of length {n}")
    shape = x.shape
    alpha = _array(_require(data, "alpha", f"{where}."), f"{where}.alpha").reshape(-1)
    return ScalarTrace(
        x=x,
        r=_array(_require(data, "r", f"{where}."), f"{where}.r", shape),
        p=_array(_require(data, "p", f"{where}."), f"{where}.p", shape),
        alpha=alpha,
        converged=bool(data.get("converged", False)),
        breakdown=bool(data.get("breakdown", False)),
    )


def oracle_from_dict(data: Dict[str, Any]) -> OracleResult:
    if data.get("format") != ORACLE_FORMAT:
        raise ValidationError("format", f"expected {ORACLE_FORMAT!r}")
    space = space_from_dict(_require(data, "space"))
    n = _dimension(data)
    solutions = _vector(_require(data, "solutions"), "solutions", space, n)
    raw = _require(data, "traces")
    if not isinstance(raw, list) or len(raw) != space.m:
        raise ValidationError("traces", f"expected {space.m} entries")
    traces = [None if t is None else _scalar_trace(t, n, f"traces[{i}]") for i, t in enumerate(raw)]
    return OracleResult(solutions, traces)


def save_oracle(path: PathLike, result: OracleResult):
    _dump_json(path, oracle_to_dict(result))


def load_oracle(path: PathLike) -> OracleResult:
    return oracle_from_dict(_read_json(path))


# === reports ===

def save_report(path: PathLike, report: Dict[str, Any]):
    _dump_json(path, report)

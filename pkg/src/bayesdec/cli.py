"""Command-line front end.

Usage::

    bayesdec [--seed N] [--format text|csv|json] [--precision P] [--quiet] COMMAND SPEC [options]

``SPEC`` is a JSON document holding exactly one analysis block (``model``,
``event``, ``decision``, ``tree`` or ``scoring``). Data may be given inline or
as a single-column CSV file. Exit codes: 0 success, 2 parse or schema error,
3 numeric or domain error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence

import numpy as np

from . import __version__
from .conjugate import (
    ConjugateModel,
    GridPrior,
    Likelihood,
    NumericPredictive,
    SampleSummary,
    event_posterior,
    fair_stake,
    grid_posterior,
    grid_predictive,
    posterior,
    posterior_predictive,
    prior_predictive,
)
from .decision import (
    Chance,
    Decision,
    DecisionProblem,
    Terminal,
    admissible_actions,
    chance_update,
    evpi,
    expected_utilities,
    opportunity_loss,
    optimal_actions,
    optimal_portfolio_weight,
    portfolio_problem,
    solve_tree,
    value_of_data,
    value_of_experiment,
    with_cost,
)
from .distributions import Distribution, Family
from .elicitation import SEARCH_BOUNDS, IntervalMass, Mean, Mode, Quantile, elicit, residuals
from .errors import BayesError
from .inference import EstimationUtility, HypothesisPartition, Region, contrast, hpd_region, point_estimate
from .jeffreys import jeffreys_posterior
from .scoring import (
    RuleKind,
    ScoreRule,
    best_normal_approx,
    binomial_poisson_discrepancy,
    exam_rule,
    expected_info_of_experiment,
    info_of_data,
    log_discrepancy,
    score,
)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3

KINDS = ("model", "event", "decision", "tree", "scoring")

COMMAND_KINDS = {
    "elicit": ("model",),
    "update": ("model", "event"),
    "predict": ("model",),
    "estimate": ("model",),
    "hpd": ("model",),
    "test": ("model",),
    "decide": ("decision",),
    "tree": ("tree",),
    "voi": ("decision",),
    "score": ("scoring",),
    "discrepancy": ("scoring",),
    "info": ("scoring",),
}

PRIOR_FAMILIES = {
    "beta": Family.BETA,
    "gamma": Family.GAMMA,
    "normal_precision": Family.NORMAL_PRECISION,
    "pareto": Family.PARETO,
    "normal_gamma": Family.NORMAL_GAMMA,
}


class SpecError(Exception):
    """Parse or schema failure; carries every problem found."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class StageError(Exception):
    def __init__(self, stage: str, cause: BayesError):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


@contextlib.contextmanager
def _stage(name: str) -> Iterator[None]:
    """Tag library failures with the operation that raised them."""
    try:
        yield
    except BayesError as exc:
        raise StageError(name, exc) from exc


# Spec parsing.


@dataclass
class AnalysisSpec:
    kind: str
    block: dict
    source: Path

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.source.parent / p


class _Checker:
    def __init__(self):
        self.problems: list[str] = []

    def fail(self, where: str, msg: str) -> None:
        self.problems.append(f"{where}: {msg}")

    def number(self, obj: dict, key: str, where: str, required: bool = True) -> bool:
        if key not in obj:
            if required:
                self.fail(f"{where}.{key}", "missing")
            return False
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{where}.{key}", f"expected a number, got {json.dumps(v)}")
            return False
        return True

    def numbers(self, obj: dict, key: str, where: str, required: bool = True, length: int | None = None) -> bool:
        if key not in obj:
            if required:
                self.fail(f"{where}.{key}", "missing")
            return False
        v = obj[key]
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            self.fail(f"{where}.{key}", "expected a list of numbers")
            return False
        if length is not None and len(v) != length:
            self.fail(f"{where}.{key}", f"expected {length} entries, got {len(v)}")
            return False
        return True

    def labels(self, obj: dict, key: str, where: str) -> bool:
        v = obj.get(key)
        if not isinstance(v, list) or not v or not all(isinstance(x, str) for x in v):
            self.fail(f"{where}.{key}", "expected a nonempty list of strings")
            return False
        if len(set(v)) != len(v):
            self.fail(f"{where}.{key}", "labels must be distinct")
            return False
        return True

    def matrix(self, obj: dict, key: str, where: str, rows: int | None, cols: int | None) -> bool:
        v = obj.get(key)
        if not isinstance(v, list) or not v:
            self.fail(f"{where}.{key}", "expected a list of rows")
            return False
        ok = True
        if rows is not None and len(v) != rows:
            self.fail(f"{where}.{key}", f"expected {rows} rows, got {len(v)}")
            ok = False
        for i, row in enumerate(v):
            if not isinstance(row, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in row
            ):
                self.fail(f"{where}.{key}[{i}]", "expected a list of numbers")
                ok = False
            elif cols is not None and len(row) != cols:
                self.fail(f"{where}.{key}[{i}]", f"row has {len(row)} entries but there are {cols} states")
                ok = False
        return ok


def _check_model(c: _Checker, m: Any) -> None:
    w = "model"
    if not isinstance(m, dict):
        c.fail(w, "expected an object")
        return
    lik = m.get("likelihood")
    valid_liks = [x.value for x in Likelihood]
    if lik not in valid_liks:
        c.fail(f"{w}.likelihood", f"expected one of {valid_liks}, got {json.dumps(lik)}")
    if lik in ("normal_known_precision", "normal_known_mean"):
        c.number(m, "known", w)
    if lik == "binomial":
        if not isinstance(m.get("trials"), int) or m.get("trials") < 1:
            c.fail(f"{w}.trials", "binomial likelihood needs a positive integer")
    prior = m.get("prior")
    if prior == "jeffreys":
        pass
    elif not isinstance(prior, dict):
        c.fail(f"{w}.prior", 'expected "jeffreys" or an object with a family')
    else:
        fam = prior.get("family")
        if fam == "grid":
            if c.numbers(prior, "support", f"{w}.prior") and c.numbers(prior, "weights", f"{w}.prior"):
                if len(prior["support"]) != len(prior["weights"]):
                    c.fail(f"{w}.prior.weights", "one weight per support point is required")
        elif fam not in PRIOR_FAMILIES:
            c.fail(f"{w}.prior.family", f"expected one of {sorted(PRIOR_FAMILIES) + ['grid']}, got {json.dumps(fam)}")
        elif "elicit" in prior:
            cons = prior["elicit"]
            if not isinstance(cons, list):
                c.fail(f"{w}.prior.elicit", "expected a list of constraints")
            else:
                for i, con in enumerate(cons):
                    _check_constraint(c, con, f"{w}.prior.elicit[{i}]")
        else:
            c.numbers(prior, "params", f"{w}.prior")
    data = m.get("data")
    if data is not None and not isinstance(data, (list, str, dict)):
        c.fail(f"{w}.data", "expected a list of numbers, a CSV path or a summary object")
    if isinstance(data, list):
        c.numbers(m, "data", w)
    if isinstance(data, dict):
        if not isinstance(data.get("n"), int) or data.get("n") < 0:
            c.fail(f"{w}.data.n", "expected a nonnegative integer")
        for k in ("sum", "r", "sum_sq", "max"):
            if k in data:
                c.number(data, k, f"{w}.data")
    hyps = m.get("hypotheses")
    if hyps is not None:
        if not isinstance(hyps, list) or not hyps:
            c.fail(f"{w}.hypotheses", "expected a nonempty list")
        else:
            for i, h in enumerate(hyps):
                hw = f"{w}.hypotheses[{i}]"
                if not isinstance(h, dict) or not isinstance(h.get("label"), str):
                    c.fail(hw, "expected an object with a string label")
                    continue
                c.number(h, "lo", hw, required=False)
                c.number(h, "hi", hw, required=False)
    util = m.get("utility")
    if util is not None:
        n_h = len(hyps) if isinstance(hyps, list) else None
        if not isinstance(util, dict):
            c.fail(f"{w}.utility", "expected an object with actions and matrix")
        elif c.labels(util, "actions", f"{w}.utility"):
            c.matrix(util, "matrix", f"{w}.utility", len(util["actions"]), n_h)
    if "target" in m and m["target"] not in ("prior", "posterior", "predictive"):
        c.fail(f"{w}.target", "expected prior, posterior or predictive")
    if "mass" in m:
        c.number(m, "mass", w)


def _check_constraint(c: _Checker, con: Any, where: str) -> None:
    if not isinstance(con, dict) or len(con) != 1:
        c.fail(where, "expected one of {mean}, {mode}, {quantile: [level, value]}, {interval_mass: [lo, hi, mass]}")
        return
    (key, val), = con.items()
    if key in ("mean", "mode"):
        c.number(con, key, where)
    elif key == "quantile":
        c.numbers(con, key, where, length=2)
    elif key == "interval_mass":
        c.numbers(con, key, where, length=3)
    else:
        c.fail(where, f"unknown constraint {key!r}")


def _check_event(c: _Checker, e: Any) -> None:
    w = "event"
    if not isinstance(e, dict):
        c.fail(w, "expected an object")
        return
    prior = e.get("prior")
    if isinstance(prior, list):
        c.numbers(e, "prior", w)
    else:
        c.number(e, "prior", w)
    c.number(e, "p_a_given_b", w)
    c.number(e, "p_a_given_not_b", w)


def _check_decision(c: _Checker, d: Any) -> None:
    w = "decision"
    if not isinstance(d, dict):
        c.fail(w, "expected an object")
        return
    if "portfolio" in d:
        p = d["portfolio"]
        pw = f"{w}.portfolio"
        if not isinstance(p, dict):
            c.fail(pw, "expected an object")
            return
        if c.numbers(p, "scenarios", pw):
            c.numbers(p, "probs", pw, length=len(p["scenarios"]))
        c.number(p, "rate", pw)
        c.numbers(p, "weights", pw)
        c.number(p, "risk_aversion", pw, required=False)
        if "actions" in p and c.labels(p, "actions", pw) and isinstance(p.get("weights"), list):
            if len(p["actions"]) != len(p["weights"]):
                c.fail(f"{pw}.actions", "one label per weight is required")
        return
    ok_a = c.labels(d, "actions", w)
    ok_s = c.labels(d, "states", w)
    c.matrix(d, "utility", w, len(d["actions"]) if ok_a else None, len(d["states"]) if ok_s else None)
    c.numbers(d, "probs", w, length=len(d["states"]) if ok_s else None)
    exp = d.get("experiment")
    if exp is not None:
        ew = f"{w}.experiment"
        if not isinstance(exp, dict):
            c.fail(ew, "expected an object")
            return
        ok_o = c.labels(exp, "outcomes", ew)
        c.matrix(exp, "likelihood", ew, len(d["states"]) if ok_s else None, len(exp["outcomes"]) if ok_o else None)
        c.number(exp, "cost", ew, required=False)


def _check_node(c: _Checker, node: Any, where: str, depth: int = 0) -> None:
    if depth > 64:
        c.fail(where, "tree is too deep")
        return
    if not isinstance(node, dict):
        c.fail(where, "expected a node object")
        return
    kind = node.get("type")
    if kind == "terminal":
        c.number(node, "utility", where)
        return
    if kind not in ("decision", "chance"):
        c.fail(f"{where}.type", f"expected decision, chance or terminal, got {json.dumps(kind)}")
        return
    branches = node.get("branches")
    if not isinstance(branches, list) or not branches:
        c.fail(f"{where}.branches", "expected a nonempty list")
        return
    for i, b in enumerate(branches):
        bw = f"{where}.branches[{i}]"
        if not isinstance(b, dict) or not isinstance(b.get("label"), str):
            c.fail(bw, "expected an object with a string label")
            continue
        if kind == "chance":
            c.number(b, "prob", bw)
        c.number(b, "cost", bw, required=False)
        if "pays_cost" in b and not isinstance(b["pays_cost"], bool):
            c.fail(f"{bw}.pays_cost", "expected true or false")
        _check_node(c, b.get("node"), f"{bw}.node", depth + 1)


def _check_tree(c: _Checker, t: Any) -> None:
    if not isinstance(t, dict) or "root" not in t:
        c.fail("tree", "expected an object with a root node")
        return
    c.number(t, "cost", "tree", required=False)
    _check_node(c, t["root"], "tree.root")


def _check_scoring(c: _Checker, s: Any) -> None:
    w = "scoring"
    if not isinstance(s, dict):
        c.fail(w, "expected an object")
        return
    rule = s.get("rule")
    if rule is not None:
        if not isinstance(rule, dict):
            c.fail(f"{w}.rule", "expected an object")
        elif "exam" in rule:
            if not isinstance(rule["exam"], int) or rule["exam"] < 2:
                c.fail(f"{w}.rule.exam", "expected an integer number of options >= 2")
        else:
            if rule.get("kind") not in ("quadratic", "logarithmic"):
                c.fail(f"{w}.rule.kind", "expected quadratic or logarithmic")
            c.number(rule, "A", f"{w}.rule", required=False)
            if isinstance(rule.get("B"), list):
                c.numbers(rule, "B", f"{w}.rule")
            else:
                c.number(rule, "B", f"{w}.rule", required=False)
    if "labels" in s:
        c.labels(s, "labels", w)
    resp = s.get("responses")
    if resp is not None:
        if not isinstance(resp, list):
            c.fail(f"{w}.responses", "expected a list")
        else:
            for i, r in enumerate(resp):
                rw = f"{w}.responses[{i}]"
                if not isinstance(r, dict):
                    c.fail(rw, "expected an object")
                    continue
                c.numbers(r, "q", rw)
                if "outcome" not in r:
                    c.fail(f"{rw}.outcome", "missing")
    for key in ("p", "q", "prior", "posterior", "marginals"):
        if key in s:
            c.numbers(s, key, w)
    if "posteriors" in s:
        c.matrix(s, "posteriors", w, None, None)
    bp = s.get("binomial_poisson")
    if bp is not None:
        if not isinstance(bp, dict):
            c.fail(f"{w}.binomial_poisson", "expected an object")
        else:
            if not isinstance(bp.get("n"), (int, list)):
                c.fail(f"{w}.binomial_poisson.n", "expected an integer or list of integers")
            if not isinstance(bp.get("theta"), (int, float, list)):
                c.fail(f"{w}.binomial_poisson.theta", "expected a number or list of numbers")
    na = s.get("normal_approx")
    if na is not None:
        if not isinstance(na, dict) or na.get("family") not in ("beta", "gamma", "normal_precision"):
            c.fail(f"{w}.normal_approx.family", "expected beta, gamma or normal_precision")
        else:
            c.numbers(na, "params", f"{w}.normal_approx")


_CHECKS = {
    "model": _check_model,
    "event": _check_event,
    "decision": _check_decision,
    "tree": _check_tree,
    "scoring": _check_scoring,
}


def parse_spec(path: str | Path) -> AnalysisSpec:
    """Read and validate a spec file, reporting every schema problem at once."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError([f"{path}: cannot read spec file ({exc.strerror or exc})"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    if not isinstance(doc, dict):
        raise SpecError([f"{path}: top level must be an object"])
    present = [k for k in KINDS if k in doc]
    problems = []
    unknown = sorted(set(doc) - set(KINDS) - {"description"})
    if unknown:
        problems.append(f"{path}: unknown top-level keys {unknown}")
    if len(present) != 1:
        problems.append(f"{path}: expected exactly one of {list(KINDS)}, found {present}")
        raise SpecError(problems)
    kind = present[0]
    checker = _Checker()
    _CHECKS[kind](checker, doc[kind])
    problems.extend(f"{path}: {p}" for p in checker.problems)
    if problems:
        raise SpecError(problems)
    return AnalysisSpec(kind, doc[kind], path)


def read_data_csv(path: str | Path) -> list[float]:
    """Single numeric column, optional header, values separated by commas or newlines."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError([f"{path}: cannot read data file ({exc.strerror or exc})"]) from exc
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if not rows:
        return []

    def is_number(tok: str) -> bool:
        try:
            float(tok)
            return True
        except ValueError:
            return False

    split = [[t.strip() for t in r.split(",")] for r in rows]
    if not all(is_number(t) for t in split[0] if t):
        split = split[1:]  # header
    if len(split) > 1 and any(len([t for t in r if t]) > 1 for r in split):
        raise SpecError([f"{path}: expected single column, found a row with several fields"])
    values = []
    for lineno, r in enumerate(split, start=1):
        for tok in r:
            if not tok:
                continue
            if not is_number(tok):
                raise SpecError([f"{path}: row {lineno}: {tok!r} is not a number"])
            values.append(float(tok))
    return values


# Output.


@dataclass
class Report:
    command: str
    summary: list[str] = field(default_factory=list)
    results: list[tuple[str, Any]] = field(default_factory=list)

    def add(self, key: str, value: Any) -> None:
        self.results.append((key, value))


def _fmt_num(v: float, precision: int) -> str:
    s = f"{v:.{precision}f}"
    if float(s) == 0.0:
        s = f"{0.0:.{precision}f}"
    return s


def _scalar(v: Any, precision: int, as_json: bool):
    if isinstance(v, (bool, np.bool_)):
        return bool(v) if as_json else str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return int(v) if as_json else str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return str(v) if as_json else str(v)
        s = _fmt_num(float(v), precision)
        return float(s) if as_json else s
    return str(v)


def _value(v: Any, precision: int, as_json: bool):
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_value(x, precision, as_json) for x in v]
    return _scalar(v, precision, as_json)


def _text_value(v: Any, precision: int) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_text_value(x, precision) for x in v) + "]"
    return _scalar(v, precision, False)


def _flatten(key: str, v: Any) -> Iterator[tuple[str, Any]]:
    if isinstance(v, (list, tuple, np.ndarray)):
        for i, x in enumerate(v):
            yield from _flatten(f"{key}[{i}]", x)
    else:
        yield key, v


def render(report: Report, fmt: str, precision: int, quiet: bool) -> str:
    if fmt == "json":
        doc = {"command": report.command}
        if not quiet:
            doc["summary"] = report.summary
        doc["results"] = {k: _value(v, precision, True) for k, v in report.results}
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in report.results:
            for fk, fv in _flatten(k, v):
                w.writerow([fk, _scalar(fv, precision, False)])
        return buf.getvalue()
    lines = [] if quiet else list(report.summary)
    width = max((len(k) for k, _ in report.results), default=0)
    lines += [f"{k.ljust(width)}  {_text_value(v, precision)}" for k, v in report.results]
    return "\n".join(lines) + "\n"


# Model helpers.


def _constraint(con: dict):
    (key, val), = con.items()
    if key == "mean":
        return Mean(float(val))
    if key == "mode":
        return Mode(float(val))
    if key == "quantile":
        return Quantile(float(val[0]), float(val[1]))
    return IntervalMass(float(val[0]), float(val[1]), float(val[2]))


def _build_prior(block: dict):
    prior = block["prior"]
    if prior == "jeffreys":
        return "jeffreys"
    fam = prior["family"]
    if fam == "grid":
        return GridPrior(tuple(prior["support"]), np.asarray(prior["weights"], dtype=float))
    family = PRIOR_FAMILIES[fam]
    if "elicit" in prior:
        with _stage("elicit"):
            return elicit(family, [_constraint(c) for c in prior["elicit"]])
    with _stage("prior"):
        return Distribution(family, tuple(prior["params"]))


def _raw_data(spec: AnalysisSpec, data_override: str | None):
    if data_override is not None:
        return read_data_csv(data_override)
    data = spec.block.get("data")
    if data is None:
        return []
    if isinstance(data, str):
        return read_data_csv(spec.resolve(data))
    return data


def _summary(raw) -> SampleSummary:
    with _stage("sample summary"):
        if isinstance(raw, dict):
            n = raw["n"]
            s = float(raw.get("sum", raw.get("r", 0.0)))
            if "sum_sq" in raw or "max" in raw:
                return SampleSummary(n, s, float(raw.get("sum_sq", 0.0)), float(raw.get("max", -math.inf)))
            return SampleSummary.binary(n, s) if s <= n and s == int(s) else SampleSummary(n, s, s * s, s)
        return SampleSummary.from_data(raw)


@dataclass
class _Model:
    likelihood: Likelihood
    prior: Any
    known: float | None
    trials: int | None
    raw: Any

    @property
    def conjugate(self) -> ConjugateModel:
        with _stage("model"):
            return ConjugateModel(self.likelihood, self.prior, self.known, self.trials)


def _load_model(spec: AnalysisSpec, args) -> _Model:
    b = spec.block
    prior = "jeffreys" if getattr(args, "prior", None) == "jeffreys" else _build_prior(b)
    raw = _raw_data(spec, getattr(args, "data", None))
    return _Model(Likelihood(b["likelihood"]), prior, b.get("known"), b.get("trials"), raw)


def _posterior_of(m: _Model) -> Distribution:
    data = _summary(m.raw)
    if m.prior == "jeffreys":
        with _stage("jeffreys_posterior"):
            return jeffreys_posterior(m.likelihood, data, trials=m.trials, known=m.known)
    with _stage("posterior"):
        return posterior(m.conjugate, data)


def _grid_data(m: _Model) -> list[float]:
    if isinstance(m.raw, dict):
        raise SpecError(["model.data: a grid prior needs the individual observations"])
    return list(m.raw)


def _add_dist(rep: Report, prefix: str, d: Distribution) -> None:
    rep.add(f"{prefix}.family", d.family.value)
    for name, v in d.as_dict().items():
        rep.add(f"{prefix}.{name}", v)
    if d.family is Family.NORMAL_GAMMA:
        return
    try:
        mean, var = d.moments()
        rep.add(f"{prefix}.mean", mean)
        rep.add(f"{prefix}.variance", var)
    except BayesError:
        pass


# Commands.


def cmd_elicit(spec: AnalysisSpec, args) -> Report:
    prior = spec.block["prior"]
    if not isinstance(prior, dict) or "elicit" not in prior:
        raise SpecError(["model.prior.elicit: the elicit command needs elicitation constraints"])
    cons = [_constraint(c) for c in prior["elicit"]]
    with _stage("elicit"):
        d = elicit(PRIOR_FAMILIES[prior["family"]], cons)
        res = residuals(d, cons)
    rep = Report("elicit", [f"prior: {d}"])
    _add_dist(rep, "prior", d)
    rep.add("residuals", res)
    rep.add("search_bounds", list(SEARCH_BOUNDS))
    return rep


def cmd_update(spec: AnalysisSpec, args) -> Report:
    if spec.kind == "event":
        e = spec.block
        priors = e["prior"] if isinstance(e["prior"], list) else [e["prior"]]
        rep = Report("update", [f"P(B | A) with P(A | B) = {e['p_a_given_b']}, P(A | not B) = {e['p_a_given_not_b']}"])
        with _stage("event_posterior"):
            post = [event_posterior(p, e["p_a_given_b"], e["p_a_given_not_b"]) for p in priors]
        rep.add("prior", [float(p) for p in priors])
        rep.add("posterior", post)
        return rep
    m = _load_model(spec, args)
    if isinstance(m.prior, GridPrior):
        with _stage("grid_posterior"):
            post = grid_posterior(m.prior, m.likelihood, _grid_data(m), known=m.known, trials=m.trials)
        rep = Report("update", ["grid posterior"])
        rep.add("n", len(_grid_data(m)))
        rep.add("support", list(post.support))
        rep.add("prior", list(m.prior.weights))
        rep.add("posterior", list(post.weights))
        return rep
    data = _summary(m.raw)
    post = _posterior_of(m)
    prior_text = "jeffreys" if m.prior == "jeffreys" else str(m.prior)
    rep = Report("update", [f"prior: {prior_text}", f"posterior: {post}"])
    rep.add("n", data.n)
    rep.add("sum", data.sum)
    _add_dist(rep, "posterior", post)
    return rep


def _target(spec: AnalysisSpec, args, default: str) -> str:
    return getattr(args, "target", None) or spec.block.get("target", default)


def _target_dist(m: _Model, target: str):
    if target == "prior":
        if m.prior == "jeffreys":
            raise SpecError(["model.prior: the Jeffreys prior is improper and cannot be the target"])
        return m.prior
    post = _posterior_of(m)
    if target == "posterior":
        return post
    if m.prior == "jeffreys":
        with _stage("posterior_predictive"):
            return prior_predictive(ConjugateModel(m.likelihood, post, m.known, m.trials))
    with _stage("posterior_predictive"):
        return posterior_predictive(m.conjugate, _summary(m.raw))


def cmd_predict(spec: AnalysisSpec, args) -> Report:
    m = _load_model(spec, args)
    rep = Report("predict")
    at = [float(x) for x in (args.at or [])]
    if isinstance(m.prior, GridPrior):
        outcomes = spec.block.get("outcomes")
        with _stage("grid_predictive"):
            prior_pred = grid_predictive(m.prior, m.likelihood, outcomes, known=m.known, trials=m.trials)
            post = grid_posterior(m.prior, m.likelihood, _grid_data(m), known=m.known, trials=m.trials)
            post_pred = grid_predictive(post, m.likelihood, outcomes, known=m.known, trials=m.trials)
        rep.summary.append("next-observation probabilities under the grid prior and posterior")
        rep.add("outcomes", [str(x) for x in post_pred.labels])
        rep.add("prior_predictive", list(prior_pred.weights))
        rep.add("posterior_predictive", list(post_pred.weights))
        if m.likelihood is Likelihood.BERNOULLI:
            rep.add("fair_stake_per_unit", fair_stake(post_pred, 1.0))
        return rep
    data = _summary(m.raw)
    if m.prior == "jeffreys":
        base = ConjugateModel(m.likelihood, _posterior_of(m), m.known, m.trials)
        with _stage("posterior_predictive"):
            prior_pred, post_pred = None, prior_predictive(base)
    else:
        with _stage("prior_predictive"):
            prior_pred = prior_predictive(m.conjugate)
            post_pred = posterior_predictive(m.conjugate, data)
    for name, pred in (("prior_predictive", prior_pred), ("posterior_predictive", post_pred)):
        if pred is None:
            continue
        if isinstance(pred, Distribution):
            rep.summary.append(f"{name.replace('_', ' ')}: {pred}")
            _add_dist(rep, name, pred)
        else:
            rep.summary.append(f"{name.replace('_', ' ')}: numeric (quadrature)")
        if at:
            with _stage(name):
                rep.add(f"{name}.density", [float(pred.pdf(x)) for x in at])
    if at:
        rep.add("at", at)
    if args.draws:
        if not isinstance(post_pred, Distribution):
            raise StageError("sample", BayesError("sampling is available for closed-form predictives only"))
        with _stage("sample"):
            draws = post_pred.sample(args.draws, args.seed)
        rep.add("draws", args.draws)
        rep.add("draws.mean", float(np.mean(draws)))
        rep.add("draws.variance", float(np.var(draws)))
    return rep


def cmd_estimate(spec: AnalysisSpec, args) -> Report:
    m = _load_model(spec, args)
    target = _target(spec, args, "posterior")
    d = _target_dist(m, target)
    if not isinstance(d, Distribution):
        raise StageError("point_estimate", BayesError("estimates need a closed-form distribution"))
    kinds = [EstimationUtility(args.utility)] if args.utility else list(EstimationUtility)
    rep = Report("estimate", [f"{target}: {d}"])
    for k in kinds:
        with _stage("point_estimate"):
            rep.add(k.value, point_estimate(d, k))
    return rep


def cmd_hpd(spec: AnalysisSpec, args) -> Report:
    m = _load_model(spec, args)
    target = _target(spec, args, "posterior")
    d = _target_dist(m, target)
    mass = args.mass if args.mass is not None else float(spec.block.get("mass", 0.95))
    with _stage("hpd_region"):
        if not isinstance(d, Distribution):
            raise BayesError("highest-density regions need a closed-form distribution")
        region = hpd_region(d, mass)
        eq = [d.quantile((1 - mass) / 2), d.quantile((1 + mass) / 2)]
    text = " U ".join(f"[{_fmt_num(a, args.precision)}, {_fmt_num(b, args.precision)}]" for a, b in region)
    rep = Report("hpd", [f"{target}: {d}", f"{mass:g} highest-density region: {text}"])
    rep.add("mass", mass)
    rep.add("intervals", [list(iv) for iv in region])
    rep.add("length", sum(b - a for a, b in region))
    rep.add("equal_tailed", eq)
    rep.add("equal_tailed_length", eq[1] - eq[0])
    return rep


def cmd_test(spec: AnalysisSpec, args) -> Report:
    m = _load_model(spec, args)
    hyps = spec.block.get("hypotheses")
    if not hyps:
        raise SpecError(["model.hypotheses: the test command needs hypotheses"])
    target = _target(spec, args, "posterior")
    d = _target_dist(m, target)
    with _stage("contrast"):
        if not isinstance(d, Distribution):
            raise BayesError("hypothesis probabilities need a closed-form distribution")
        part = HypothesisPartition(
            tuple(Region(h["label"], h.get("lo", -math.inf), h.get("hi", math.inf)) for h in hyps)
        )
        util = spec.block.get("utility")
        if util:
            res = contrast(d, part, util["matrix"], util["actions"])
        else:
            res = contrast(d, part)
    rep = Report("test", [f"{target}: {d}", f"chosen: {', '.join(map(str, res.chosen))}"])
    rep.add("hypotheses", [str(x) for x in res.probabilities.labels])
    rep.add("probabilities", list(res.probabilities.weights))
    if util:
        rep.add("actions", list(res.actions))
        rep.add("expected_utilities", list(res.expected_utilities))
    rep.add("chosen", [str(x) for x in res.chosen])
    return rep


def _decision_problem(block: dict) -> DecisionProblem:
    with _stage("decision problem"):
        if "portfolio" in block:
            p = block["portfolio"]
            return portfolio_problem(
                p["scenarios"], p["probs"], p["rate"], p["weights"], p.get("risk_aversion", 0.0), p.get("actions", ())
            )
        return DecisionProblem(tuple(block["actions"]), tuple(block["states"]), block["utility"], block["probs"])


def cmd_decide(spec: AnalysisSpec, args) -> Report:
    prob = _decision_problem(spec.block)
    with _stage("optimal_actions"):
        eu = expected_utilities(prob)
        best = optimal_actions(prob)
        adm = admissible_actions(prob)
    rep = Report("decide", [f"optimal: {', '.join(map(str, best))}"])
    rep.add("actions", list(prob.actions))
    rep.add("expected_utilities", list(eu))
    rep.add("optimal", list(best))
    rep.add("admissible", list(adm))
    p = spec.block.get("portfolio")
    if p and p.get("risk_aversion", 0.0) > 0:
        with _stage("optimal_portfolio_weight"):
            a, w = optimal_portfolio_weight(p["scenarios"], p["probs"], p["rate"], p["risk_aversion"])
        rep.add("continuous.a_star", a)
        rep.add("continuous.expected_utility", w)
    return rep


def _build_node(node: dict, cost: float) -> Any:
    kind = node["type"]
    if kind == "terminal":
        return Terminal(float(node["utility"]), node.get("name"))
    children = []
    for b in node["branches"]:
        child = _build_node(b["node"], cost)
        charge = float(b.get("cost", 0.0)) + (cost if b.get("pays_cost") else 0.0)
        if charge:
            child = with_cost(child, charge)
        children.append((b["label"], child))
    if kind == "decision":
        return Decision(tuple(children), node.get("name"))
    return Chance(tuple(children), tuple(float(b["prob"]) for b in node["branches"]), node.get("name"))


def _compact(v: float, precision: int) -> str:
    s = _fmt_num(v, precision)
    return s.rstrip("0").rstrip(".") if "." in s else s


def _tree_lines(node: Any, path: str, label: str, sol, precision: int, depth: int) -> Iterator[str]:
    nid = node.name if node.name is not None else path
    kind = type(node).__name__.lower()
    line = f"{'  ' * depth}{label} [{kind}] {_fmt_num(sol.values[nid], precision)}"
    if nid in sol.policy:
        line += f" -> {', '.join(sol.policy[nid])}"
    yield line
    if isinstance(node, Terminal):
        return
    probs = node.probs if isinstance(node, Chance) else (None,) * len(node.branches)
    for (lab, child), pr in zip(node.branches, probs):
        shown = lab if pr is None else f"{lab} (p={_compact(pr, precision)})"
        yield from _tree_lines(child, f"{path}/{lab}", shown, sol, precision, depth + 1)


def cmd_tree(spec: AnalysisSpec, args) -> Report:
    cost = args.cost if args.cost is not None else float(spec.block.get("cost", 0.0))
    with _stage("solve_tree"):
        root = _build_node(spec.block["root"], cost)
        sol = solve_tree(root)
    root_id = root.name if root.name is not None else "root"
    choice = ", ".join(sol.policy.get(root_id, ())) or "(none)"
    rep = Report("tree", [f"optimal: {choice}; value {_compact(sol.value, args.precision)}"])
    rep.summary += list(_tree_lines(root, "root", "root", sol, args.precision, 0))
    rep.add("cost", cost)
    rep.add("value", sol.value)
    for nid, labels in sol.policy.items():
        rep.add(f"policy.{nid}", list(labels))
    for nid, v in sol.values.items():
        rep.add(f"node.{nid}", v)
    return rep


def cmd_voi(spec: AnalysisSpec, args) -> Report:
    prob = _decision_problem(spec.block)
    exp = spec.block.get("experiment")
    if not exp:
        raise SpecError(["decision.experiment: the voi command needs an experiment"])
    cost = float(args.cost if args.cost is not None else exp.get("cost", 0.0))
    lik = np.asarray(exp["likelihood"], dtype=float)
    rep = Report("voi")
    with _stage("evpi"):
        v_star = evpi(prob)
        losses = [[opportunity_loss(prob, a, s) for s in prob.states] for a in prob.actions]
    rep.add("evpi", v_star)
    for a, row in zip(prob.actions, losses):
        rep.add(f"opportunity_loss.{a}", row)
    with _stage("value_of_data"):
        for i, o in enumerate(exp["outcomes"]):
            post, marg = chance_update(prob.probs, lik[:, i])
            rep.add(f"outcome.{o}.marginal", marg)
            rep.add(f"outcome.{o}.posterior", list(post.weights))
            rep.add(f"outcome.{o}.value", value_of_data(prob, lik, i, cost))
    with _stage("value_of_experiment"):
        v = value_of_experiment(prob, lik, cost)
    rep.add("cost", cost)
    rep.add("value_of_experiment", v)
    rep.add("bound", v_star - cost)
    rep.add("bound_holds", bool(v <= v_star - cost + 1e-12))
    rep.summary.append(f"v(e) = {_fmt_num(v, args.precision)} <= evpi - cost = {_fmt_num(v_star - cost, args.precision)}")
    return rep


def _scoring_rule(block: dict) -> ScoreRule:
    rule = block.get("rule")
    if rule is None:
        raise SpecError(["scoring.rule: missing"])
    with _stage("scoring rule"):
        if "exam" in rule:
            return exam_rule(rule["exam"])
        b = rule.get("B", 0.0)
        return ScoreRule(RuleKind(rule["kind"]), float(rule.get("A", 1.0)), tuple(b) if isinstance(b, list) else b)


def _read_responses(path: Path) -> list[dict]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError([f"{path}: cannot read responses ({exc.strerror or exc})"]) from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if any(t.strip() for t in r)]
    out = []
    for lineno, r in enumerate(rows, start=1):
        try:
            q = [float(t) for t in r[1:-1]]
        except ValueError:
            if lineno == 1:
                continue
            raise SpecError([f"{path}: row {lineno}: probabilities must be numbers"]) from None
        out.append({"id": r[0].strip(), "q": q, "outcome": r[-1].strip()})
    return out


def cmd_score(spec: AnalysisSpec, args) -> Report:
    b = spec.block
    rule = _scoring_rule(b)
    responses = list(b.get("responses", []))
    if "responses_file" in b:
        responses += _read_responses(spec.resolve(b["responses_file"]))
    if not responses:
        raise SpecError(["scoring.responses: the score command needs responses"])
    rep = Report("score", [f"{rule.kind.value} rule, A = {rule.A:g}"])
    scores = []
    for i, r in enumerate(responses):
        labels = tuple(b.get("labels") or [str(j) for j in range(len(r["q"]))])
        with _stage("score"):
            from .probvector import ProbVector

            q = ProbVector(np.asarray(r["q"], dtype=float), labels)
            s = score(rule, q, str(r["outcome"]))
        rid = r.get("id") or str(i + 1)
        rep.add(f"score.{rid}", s)
        scores.append(s)
    rep.add("total", float(sum(scores)))
    return rep


def cmd_discrepancy(spec: AnalysisSpec, args) -> Report:
    b = spec.block
    rep = Report("discrepancy")
    done = False
    if "p" in b and "q" in b:
        with _stage("log_discrepancy"):
            rep.add("log_discrepancy", log_discrepancy(b["p"], b["q"]))
        done = True
    if "binomial_poisson" in b:
        bp = b["binomial_poisson"]
        ns = bp["n"] if isinstance(bp["n"], list) else [bp["n"]]
        ts = bp["theta"] if isinstance(bp["theta"], list) else [bp["theta"]]
        with _stage("binomial_poisson_discrepancy"):
            for n in ns:
                rep.add(f"binomial_poisson.n={n}", [binomial_poisson_discrepancy(n, t) for t in ts])
        rep.add("binomial_poisson.theta", [float(t) for t in ts])
        done = True
    if "normal_approx" in b:
        na = b["normal_approx"]
        with _stage("best_normal_approx"):
            target = Distribution(PRIOR_FAMILIES[na["family"]], tuple(na["params"]))
            mean, var = target.moments()
            approx = best_normal_approx(mean, var)
            rep.summary.append(f"best normal approximation to {target}: {approx}")
            _add_dist(rep, "normal", approx)
            rep.add("normal.log_discrepancy", log_discrepancy(target, approx))
        done = True
    if not done:
        raise SpecError(["scoring: the discrepancy command needs p and q, binomial_poisson or normal_approx"])
    return rep


def cmd_info(spec: AnalysisSpec, args) -> Report:
    b = spec.block
    if "prior" not in b:
        raise SpecError(["scoring.prior: the info command needs a prior"])
    rep = Report("info")
    done = False
    if "posterior" in b:
        with _stage("info_of_data"):
            rep.add("info_of_data", info_of_data(b["prior"], b["posterior"]))
        done = True
    if "posteriors" in b and "marginals" in b:
        with _stage("expected_info_of_experiment"):
            for i, post in enumerate(b["posteriors"]):
                rep.add(f"info_of_data[{i}]", info_of_data(b["prior"], post))
            rep.add("expected_info", expected_info_of_experiment(b["prior"], b["marginals"], b["posteriors"]))
        done = True
    if not done:
        raise SpecError(["scoring: the info command needs a posterior, or marginals with posteriors"])
    return rep


COMMANDS = {
    "elicit": cmd_elicit,
    "update": cmd_update,
    "predict": cmd_predict,
    "estimate": cmd_estimate,
    "hpd": cmd_hpd,
    "test": cmd_test,
    "decide": cmd_decide,
    "tree": cmd_tree,
    "voi": cmd_voi,
    "score": cmd_score,
    "discrepancy": cmd_discrepancy,
    "info": cmd_info,
}


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="seed for sampling (default 0)")
    parser.add_argument("--format", choices=("text", "csv", "json"), default=d("text"))
    parser.add_argument("--precision", type=int, default=d(4), help="decimals in numeric output (default 4)")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="omit summary lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesdec", description="Bayesian inference and decision analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _global_flags(p, suppress=True)
        p.add_argument("spec", help="JSON spec file")
        if name in ("update", "predict", "estimate", "hpd", "test"):
            p.add_argument("--data", help="single-column CSV of observations (overrides the spec file)")
        if name in ("update", "predict", "estimate", "hpd", "test"):
            p.add_argument("--prior", choices=("jeffreys",), help="replace the spec file prior by the Jeffreys prior")
        if name in ("estimate", "hpd", "test"):
            p.add_argument("--target", choices=("prior", "posterior", "predictive"))
        if name == "estimate":
            p.add_argument("--utility", choices=[u.value for u in EstimationUtility])
        if name == "hpd":
            p.add_argument("--mass", type=float)
        if name == "predict":
            p.add_argument("--at", type=float, action="append", help="evaluate the predictive here (repeatable)")
            p.add_argument("--draws", type=int, default=0, help="summarize this many seeded draws")
        if name in ("voi", "tree"):
            p.add_argument("--cost", type=float, help="experiment cost (overrides the spec file)")
    return parser


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_SCHEMA
    if args.precision < 0 or args.precision > 17:
        print("error: --precision must lie in [0, 17]", file=err)
        return EXIT_SCHEMA
    try:
        spec = parse_spec(args.spec)
        if spec.kind not in COMMAND_KINDS[args.command]:
            raise SpecError([f"{args.spec}: the {args.command} command expects a {' or '.join(COMMAND_KINDS[args.command])} block, found {spec.kind}"])
        report = COMMANDS[args.command](spec, args)
    except SpecError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=err)
        return EXIT_SCHEMA
    except StageError as exc:
        print(f"error: {args.command}: {exc.stage}: {exc.cause}", file=err)
        return EXIT_NUMERIC
    except BayesError as exc:
        print(f"error: {args.command}: {exc}", file=err)
        return EXIT_NUMERIC
    out.write(render(report, args.format, args.precision, args.quiet))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())

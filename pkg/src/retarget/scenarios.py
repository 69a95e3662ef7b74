"""Scenario configs, the built-in scenario registry, table reproduction and run reports.

Config files are INI-style text with these sections::

    [scenario]   id, kind (orbit | mdp | bandit), description, seed, dimension
    [outcomes]   name = comma-separated vector
    [sets]       name = comma-separated outcome names (A and B required; C defaults to A ∪ B)
    [check]      n, domain, num_thetas, grid (low..high), thetas (';'-separated vectors),
                 detail (violations | all), copies (two set names)
    [rule:NAME]  kind plus rule parameters; optional certificate = i:j, i:j, ...
    [mdp]        fixture, start, dprime, n, orbits, samples, sampler
    [bandit]     utilities, epsilon, trials, runs

Vectors are written with exact decimals or integers so orbits deduplicate exactly.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from . import __version__
from .bandit import BanditSpec, bandit_retarget_check, p_train_estimate, success_lower_bound
from .decisions import (
    DecisionRule,
    boltzmann,
    is_anti_optimal,
    is_optimal,
    satisfice,
)
from .mdp import (
    RewardSampler,
    avg_opt_probability,
    load_mdp,
    one_cycle_states,
    orbit_avgprob_check,
    rsd_nd,
    rsd_set,
    state_basis,
)
from .outcomes import find_copies
from .perms import Domain, Permutation, Vector, act_vector, as_vector, enumerate_orbit
from .tendency import (
    COUNTEREXAMPLE_ROWS,
    RetargetCertificate,
    check_geq_most_sampled,
    check_multi_retargetable,
    counterexample_fixture,
)

SCHEMA_VERSION = "1.0"
BUILTINS = ("pacman3", "mr-actions5", "featurized4", "toy-mdp", "bandit5")
KINDS = ("orbit", "mdp", "bandit")


class ConfigError(ValueError):
    pass


# -- value formatting --------------------------------------------------------

def format_number(x: float) -> str:
    """Shortest exact text for a float: integers without a decimal point."""
    x = float(x)
    if x.is_integer():
        return str(int(x))
    return repr(x)


def format_vector(v: Sequence[float]) -> str:
    return ", ".join(format_number(x) for x in v)


def parse_number(text: str) -> float:
    return float(Fraction(text.strip()))


def parse_vector(text: str) -> Vector:
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    if not parts:
        raise ValueError("empty vector")
    return as_vector(parse_number(p) for p in parts)


def parse_vectors(text: str) -> tuple[Vector, ...]:
    return tuple(parse_vector(chunk) for chunk in text.split(";") if chunk.strip())


def parse_names(text: str) -> tuple[str, ...]:
    return tuple(p for p in (s.strip() for s in text.split(",")) if p)


def parse_swaps(text: str, d: int) -> tuple[Permutation, ...]:
    perms = []
    for part in parse_names(text):
        m = re.fullmatch(r"(\d+)\s*:\s*(\d+)", part)
        if not m:
            raise ValueError(f"expected i:j, got {part!r}")
        perms.append(Permutation.transposition(d, int(m.group(1)), int(m.group(2))))
    return tuple(perms)


# -- config -------------------------------------------------------------------

@dataclass(frozen=True)
class RuleSpec:
    name: str
    kind: str
    params: tuple[tuple[str, str], ...] = ()
    certificate: str = ""

    def rule(self) -> DecisionRule:
        params: dict[str, Any] = {}
        for key, value in self.params:
            if key in ("k", "budget", "seed", "choice", "a", "b"):
                params[key] = int(value)
            else:
                params[key] = parse_number(value)
        return DecisionRule(self.kind, params)


@dataclass(frozen=True)
class ScenarioConfig:
    id: str
    kind: str
    description: str = ""
    seed: int = 0
    dimension: int = 0
    outcomes: tuple[tuple[str, Vector], ...] = ()
    sets: tuple[tuple[str, tuple[str, ...]], ...] = ()
    n: int = 1
    domain: str = "all"
    num_thetas: int = 0
    grid: tuple[int, int] = (-3, 10)
    thetas: tuple[Vector, ...] = ()
    detail: str = "violations"
    copies: tuple[str, ...] = ()
    rules: tuple[RuleSpec, ...] = ()
    mdp: tuple[tuple[str, str], ...] = ()
    bandit: tuple[tuple[str, str], ...] = ()
    base_dir: Optional[str] = field(default=None, compare=False)

    def outcome(self, name: str) -> Vector:
        return dict(self.outcomes)[name]

    def set_vectors(self, name: str) -> frozenset:
        table = dict(self.sets)
        if name == "C" and "C" not in table:
            return self.set_vectors("A") | self.set_vectors("B")
        return frozenset(self.outcome(o) for o in table[name])

    def to_text(self) -> str:
        cp = _parser()
        cp["scenario"] = {"id": self.id, "kind": self.kind}
        if self.description:
            cp["scenario"]["description"] = self.description
        cp["scenario"]["seed"] = str(self.seed)
        if self.dimension:
            cp["scenario"]["dimension"] = str(self.dimension)
        if self.outcomes:
            cp["outcomes"] = {name: format_vector(v) for name, v in self.outcomes}
        if self.sets:
            cp["sets"] = {name: ", ".join(members) for name, members in self.sets}
        if self.kind == "orbit":
            check = {"n": str(self.n), "domain": self.domain, "num_thetas": str(self.num_thetas),
                     "grid": f"{self.grid[0]}..{self.grid[1]}", "detail": self.detail}
            if self.thetas:
                check["thetas"] = "; ".join(format_vector(t) for t in self.thetas)
            if self.copies:
                check["copies"] = ", ".join(self.copies)
            cp["check"] = check
        for spec in self.rules:
            section = {"kind": spec.kind, **dict(spec.params)}
            if spec.certificate:
                section["certificate"] = spec.certificate
            cp[f"rule:{spec.name}"] = section
        if self.mdp:
            cp["mdp"] = dict(self.mdp)
        if self.bandit:
            cp["bandit"] = dict(self.bandit)
        out = io.StringIO()
        cp.write(out)
        return out.getvalue().rstrip() + "\n"


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    return cp


def _locate(text: str, section: str, key: Optional[str] = None) -> str:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key is None and current == section:
                return f"line {lineno}"
            continue
        if current == section and key is not None and "=" in stripped:
            if stripped.split("=", 1)[0].strip() == key:
                return f"line {lineno}"
    return "config"


_SCENARIO_KEYS = {"id", "kind", "description", "seed", "dimension"}
_CHECK_KEYS = {"n", "domain", "num_thetas", "grid", "thetas", "detail", "copies"}
_MDP_KEYS = {"fixture", "start", "dprime", "n", "orbits", "samples", "sampler"}
_BANDIT_KEYS = {"utilities", "epsilon", "trials", "runs"}


def parse_config(text: str, base_dir=None) -> ScenarioConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    def fail(section, key, message):
        raise ConfigError(f"{_locate(text, section, key)}: [{section}] {key or ''}: {message}".replace(" : ", ": "))

    def get(section, key, convert, default=None, required=False):
        if not cp.has_option(section, key):
            if required:
                fail(section, key, "missing required field")
            return default
        raw = cp.get(section, key)
        try:
            return convert(raw)
        except (ValueError, ZeroDivisionError) as exc:
            fail(section, key, f"bad value {raw!r} ({exc})")

    def check_keys(section, allowed):
        for key in cp.options(section):
            if key not in allowed:
                fail(section, key, f"unknown field (expected one of {sorted(allowed)})")

    if not cp.has_section("scenario"):
        raise ConfigError("config: missing [scenario] section")
    known = {"scenario", "outcomes", "sets", "check", "mdp", "bandit"}
    for section in cp.sections():
        if section not in known and not section.startswith("rule:"):
            fail(section, None, "unknown section")
    check_keys("scenario", _SCENARIO_KEYS)
    sid = get("scenario", "id", str.strip, required=True)
    kind = get("scenario", "kind", str.strip, required=True)
    if kind not in KINDS:
        fail("scenario", "kind", f"must be one of {KINDS}")
    seed = get("scenario", "seed", int, 0)
    description = get("scenario", "description", str.strip, "")
    dimension = get("scenario", "dimension", int, 0)

    outcomes = []
    if cp.has_section("outcomes"):
        for name in cp.options("outcomes"):
            vec = get("outcomes", name, parse_vector)
            if dimension and len(vec) != dimension:
                fail("outcomes", name, f"has length {len(vec)}, expected dimension {dimension}")
            outcomes.append((name, vec))
    names = {n for n, _ in outcomes}
    if outcomes and not dimension:
        dimension = len(outcomes[0][1])
    if len({len(v) for _, v in outcomes}) > 1:
        fail("outcomes", None, "vectors differ in length")

    sets = []
    if cp.has_section("sets"):
        for name in cp.options("sets"):
            members = get("sets", name, parse_names)
            for m in members:
                if m not in names:
                    fail("sets", name, f"unknown outcome {m!r}")
            sets.append((name, members))

    config: dict[str, Any] = dict(id=sid, kind=kind, description=description, seed=seed,
                                  dimension=dimension, outcomes=tuple(outcomes), sets=tuple(sets),
                                  base_dir=None if base_dir is None else str(base_dir))

    if kind == "orbit":
        set_names = {n for n, _ in sets}
        for required in ("A", "B"):
            if required not in set_names:
                fail("sets", required, "missing required set")
        table = dict(sets)
        if "C" in table and not (set(table["A"]) | set(table["B"])) <= set(table["C"]):
            fail("sets", "C", "A and B must be subsets of C")
        if not cp.has_section("check"):
            raise ConfigError("config: missing [check] section")
        check_keys("check", _CHECK_KEYS)

        def grid(raw):
            m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", raw)
            if not m or int(m.group(1)) > int(m.group(2)):
                raise ValueError("expected low..high")
            return (int(m.group(1)), int(m.group(2)))

        config.update(
            n=get("check", "n", int, required=True),
            domain=get("check", "domain", lambda s: str(Domain.parse(s)), "all"),
            num_thetas=get("check", "num_thetas", int, 0),
            grid=get("check", "grid", grid, (-3, 10)),
            thetas=get("check", "thetas", parse_vectors, ()),
            detail=get("check", "detail", str.strip, "violations"),
            copies=get("check", "copies", parse_names, ()),
        )
        if config["detail"] not in ("violations", "all"):
            fail("check", "detail", "must be 'violations' or 'all'")
        for t in config["thetas"]:
            if len(t) != dimension:
                fail("check", "thetas", f"vector {t} has length {len(t)}, expected {dimension}")
        if config["copies"] and (len(config["copies"]) != 2 or not set(config["copies"]) <= set_names):
            fail("check", "copies", "expected two defined set names")
        rules = []
        for section in cp.sections():
            if not section.startswith("rule:"):
                continue
            rname = section[5:].strip()
            rkind = get(section, "kind", str.strip, required=True)
            params = tuple((k, cp.get(section, k).strip()) for k in cp.options(section)
                           if k not in ("kind", "certificate"))
            spec = RuleSpec(rname, rkind, params, get(section, "certificate", str.strip, ""))
            try:
                spec.rule()
                if spec.certificate:
                    parse_swaps(spec.certificate, dimension)
            except (ValueError, IndexError) as exc:
                fail(section, None, str(exc))
            rules.append(spec)
        if not rules:
            raise ConfigError("config: an orbit scenario needs at least one [rule:NAME] section")
        config["rules"] = tuple(rules)
    elif kind == "mdp":
        if not cp.has_section("mdp"):
            raise ConfigError("config: missing [mdp] section")
        check_keys("mdp", _MDP_KEYS)
        for key in ("fixture", "dprime"):
            get("mdp", key, str, required=True)
        for key in ("n", "orbits", "samples"):
            get("mdp", key, int)
        config["mdp"] = tuple((k, cp.get("mdp", k).strip()) for k in cp.options("mdp"))
    else:
        if not cp.has_section("bandit"):
            raise ConfigError("config: missing [bandit] section")
        check_keys("bandit", _BANDIT_KEYS)
        get("bandit", "utilities", parse_vector, required=True)
        get("bandit", "epsilon", parse_number)
        for key in ("trials", "runs"):
            get("bandit", key, int)
        config["bandit"] = tuple((k, cp.get("bandit", k).strip()) for k in cp.options("bandit"))
    return ScenarioConfig(**config)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def builtin_text(name: str) -> str:
    if name not in BUILTINS:
        raise ConfigError(f"unknown built-in scenario {name!r}; expected one of {BUILTINS}")
    return resources.files("retarget").joinpath("data", f"{name}.ini").read_text()


def load_builtin(name: str) -> ScenarioConfig:
    return parse_config(builtin_text(name), base_dir=resources.files("retarget").joinpath("data"))


# -- reports -------------------------------------------------------------------

@dataclass(frozen=True)
class RunReport:
    scenario: str
    kind: str
    seed: int
    verdict: str
    results: Mapping[str, Any]
    tool_version: str = __version__
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "scenario": self.scenario,
            "kind": self.kind,
            "seed": self.seed,
            "verdict": self.verdict,
            "results": self.results,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {data.get('schema_version')!r}")
        return cls(data["scenario"], data["kind"], int(data["seed"]), data["verdict"], data["results"],
                   data["tool_version"], data["schema_version"])

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def _sigma_ok(est, bound: float, sigmas: float = 3.0, above: bool = True) -> bool:
    if above:
        return est.mean >= bound - sigmas * est.stderr
    return est.mean <= bound + sigmas * est.stderr


def _run_orbit(cfg: ScenarioConfig, seed: int, workers: int) -> tuple[bool, dict]:
    A, B, C = cfg.set_vectors("A"), cfg.set_vectors("B"), cfg.set_vectors("C")
    domain = Domain.parse(cfg.domain)
    d = cfg.dimension
    results: dict[str, Any] = {"n": cfg.n, "domain": str(domain), "dimension": d}
    ok = True
    if cfg.copies:
        first, second = cfg.copies
        cert = find_copies(cfg.set_vectors(first), cfg.set_vectors(second), cfg.n)
        results["copies"] = {"sets": [first, second], "found": cert is not None,
                             "involutions": [str(p) for p in cert.involutions] if cert else []}
        ok &= cert is not None
    fixtures = [tuple(t) for t in cfg.thetas]
    rule_results = []
    for spec in cfg.rules:
        f = spec.rule().bind(C)
        sampled = check_geq_most_sampled(f, A, B, d, domain, cfg.n, cfg.num_thetas, seed, extra=fixtures,
                                         low=cfg.grid[0], high=cfg.grid[1], workers=workers)
        entry: dict[str, Any] = {
            "name": spec.name,
            "rule": spec.rule().label(),
            "holds": sampled.holds,
            "num_orbits": len(sampled.reports),
            "num_violations": len(sampled.violations),
            "violations": [r.to_dict() for r in sampled.violations],
        }
        if cfg.detail == "all":
            entry["reports"] = [r.to_dict() for r in sampled.reports]
        else:
            entry["fixture_reports"] = [r.to_dict() for r in sampled.reports[len(sampled.reports) - len(fixtures):]] \
                if fixtures else []
        rule_ok = sampled.holds
        if spec.certificate:
            cert = RetargetCertificate(len(parse_swaps(spec.certificate, d)), parse_swaps(spec.certificate, d))
            conditions = {"retargetable": True, "allowed": True, "distinct": True}
            for report in sampled.reports:
                for key, value in check_multi_retargetable(f, A, B, report.theta, domain, cert).items():
                    conditions[key] &= value
            entry["certificate"] = {"swaps": spec.certificate, "conditions": conditions}
            rule_ok &= all(conditions.values())
        ok &= rule_ok
        rule_results.append(entry)
    results["rules"] = rule_results
    return ok, results


def _mdp_path(cfg: ScenarioConfig, name: str) -> Path:
    path = Path(name)
    if not path.is_absolute() and cfg.base_dir is not None:
        path = Path(cfg.base_dir) / path
    return path


def _run_mdp(cfg: ScenarioConfig, seed: int) -> tuple[bool, dict]:
    opts = dict(cfg.mdp)
    mdp = load_mdp(_mdp_path(cfg, opts["fixture"]))
    start = opts.get("start", mdp.states[0])
    n = int(opts.get("n", 1))
    kind = opts.get("sampler", "iid-uniform-01")
    rsds = rsd_set(mdp, start)
    dprime = frozenset(state_basis(mdp, s) for s in parse_names(opts["dprime"]))
    missing = dprime - rsds
    if missing:
        raise ConfigError(f"[mdp] dprime: {sorted(missing)} are not RSDs from {start}")
    D = rsds - dprime
    cert = find_copies(dprime, D, n)
    reports = orbit_avgprob_check(mdp, dprime, D, n, RewardSampler(kind, seed), int(opts.get("orbits", 200)),
                                  start, rsds)
    samples = int(opts.get("samples", 10_000))
    p_dprime = avg_opt_probability(mdp, dprime, RewardSampler(kind, seed + 1), samples, start, rsds)
    p_d = avg_opt_probability(mdp, D, RewardSampler(kind, seed + 1), samples, start, rsds)
    one_cycle, terminal = one_cycle_states(mdp)
    bound = 1.0 / (n + 1)
    violations = [r for r in reports if not r.holds]
    ok = cert is not None and not violations and _sigma_ok(p_dprime.estimate, bound, above=False)
    results = {
        "start": start,
        "n": n,
        "one_cycle_states": sorted(one_cycle),
        "terminal_states": sorted(terminal),
        "rsd_set": [list(v) for v in sorted(rsds)],
        "rsd_nd": [list(v) for v in sorted(rsd_nd(mdp, start))],
        "copies": {"found": cert is not None, "involutions": [str(p) for p in cert.involutions] if cert else []},
        "num_orbits": len(reports),
        "orbit_sizes": sorted({r.orbit_size for r in reports}),
        "violations": [r.to_dict() for r in violations],
        "min_agreement_fraction": str(min((r.agreement_fraction for r in reports), default=Fraction(1))),
        "avg_opt_dprime": p_dprime.estimate.to_dict(),
        "avg_opt_rest": p_d.estimate.to_dict(),
        "discarded_ties": p_dprime.discarded_ties,
        "dprime_bound": bound,
    }
    return ok, results


def _run_bandit(cfg: ScenarioConfig, seed: int) -> tuple[bool, dict]:
    opts = dict(cfg.bandit)
    u = parse_vector(opts["utilities"])
    eps = parse_number(opts.get("epsilon", "0.2"))
    trials = int(opts.get("trials", 100))
    runs = int(opts.get("runs", 10_000))
    spec = BanditSpec(u, eps, trials)
    best = max(range(len(u)), key=lambda a: u[a])
    est = p_train_estimate(spec, [best], runs, seed)
    bound = success_lower_bound(eps, trials, len(u))
    retarget = bandit_retarget_check(u, eps, trials, runs, seed + 1)
    ok = _sigma_ok(est, bound) and retarget.passes
    results = {
        "optimal_arm": best,
        "optimal_arm_frequency": est.to_dict(),
        "lower_bound": bound,
        "retarget": retarget.to_dict(),
    }
    return ok, results


def run_scenario(cfg: ScenarioConfig, seed: Optional[int] = None, workers: int = 1) -> RunReport:
    seed = cfg.seed if seed is None else int(seed)
    if cfg.kind == "orbit":
        ok, results = _run_orbit(cfg, seed, workers)
    elif cfg.kind == "mdp":
        ok, results = _run_mdp(cfg, seed)
    else:
        ok, results = _run_bandit(cfg, seed)
    return RunReport(cfg.id, cfg.kind, seed, "holds" if ok else "refuted", results)


# -- tables ----------------------------------------------------------------------

PACMAN = ("ghost", "apple", "cherry")
TABLES = ("permute-states", "rationalities", "counterexample")


def _basis3(i: int) -> Vector:
    return tuple(1.0 if j == i else 0.0 for j in range(3))


def permute_states_rows() -> list[tuple[str, Vector, str]]:
    """Utility vectors and their best outcome for the six-element orbit of (10, 5, 0)."""
    u, u_alt = (10.0, 5.0, 0.0), (10.0, 0.0, 5.0)
    swaps = [("", Permutation.identity(3)), ("swap(ghost,apple) ", Permutation.transposition(3, 0, 1)),
             ("swap(ghost,cherry) ", Permutation.transposition(3, 0, 2))]
    rows = []
    for base, name in ((u, "u"), (u_alt, "u'")):
        for prefix, phi in swaps:
            v = act_vector(phi, base)
            rows.append((prefix + name, v, PACMAN[max(range(3), key=lambda j: v[j])]))
    return rows


def rationality_columns() -> list[Vector]:
    return list(enumerate_orbit((10, 5, 0)).elements)[::-1]


def rationality_tables() -> dict[str, list[tuple[str, list[float]]]]:
    C = frozenset(_basis3(j) for j in range(3))
    ga = frozenset({_basis3(0), _basis3(1)})
    ch = frozenset({_basis3(2)})
    cols = rationality_columns()
    rules = {
        "optimal": lambda X, u: float(is_optimal(X, C, u)),
        "anti-optimal": lambda X, u: float(is_anti_optimal(X, C, u)),
        "boltzmann T=1": lambda X, u: boltzmann(X, C, u, 1.0),
        "satisficer t=3": lambda X, u: satisfice(X, C, u, 3.0),
    }
    return {
        title: [("{ghost, apple}", [f(ga, u) for u in cols]), ("{cherry}", [f(ch, u) for u in cols])]
        for title, f in rules.items()
    }


def counterexample_rows() -> list[tuple[Vector, list[float]]]:
    f, *_ = counterexample_fixture()
    return [(as_vector(t), [f(label, t) for label in ("A", "apple", "cherry", "B")]) for t in COUNTEREXAMPLE_ROWS]


def format_value(x: float) -> str:
    text = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def _table_data(table_id: str) -> list[list[list[str]]]:
    """One or more blocks of string rows, the first row of each block being its header."""
    if table_id == "permute-states":
        block = [["utility", *PACMAN, "best"]]
        for label, v, best in permute_states_rows():
            block.append([label, *(format_number(x) for x in v), best])
        return [block]
    if table_id == "rationalities":
        cols = rationality_columns()
        blocks = []
        for title, rows in rationality_tables().items():
            block = [[title, *("(" + format_vector(u).replace(" ", "") + ")" for u in cols)]]
            for label, values in rows:
                block.append([label, *(format_value(x) for x in values)])
            blocks.append(block)
        return blocks
    if table_id == "counterexample":
        block = [["theta", "f(A)", "f(B1*)", "f(B2*)", "f(B)"]]
        for theta, values in counterexample_rows():
            block.append(["(" + format_vector(theta).replace(" ", "") + ")", *(format_number(x) for x in values)])
        return [block]
    raise ValueError(f"unknown table {table_id!r}; expected one of {TABLES}")


def reproduce_table(table_id: str, fmt: str = "text") -> str:
    blocks = _table_data(table_id)
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        for block in blocks:
            writer.writerows(block)
        return out.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    chunks = []
    for block in blocks:
        widths = [max(len(row[j]) for row in block) for j in range(len(block[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in block]
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"

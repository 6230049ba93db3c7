"""System definition files (YAML).

Either a `buzzard:` preset block

    buzzard:
      delta: 7.0e-8
      kappa0: 1.0e-6            # optional; also c1, kappa1, kappa2, c_prime, lambda_growth
      perturbation: {eta: 1.0e-3, seed: 0}   # optional

or an explicit system

    alphabet: [a, b]
    transitions: full           # or a list of pairs
    pieces:
      a: {center: [0, 0], side: 1}
    branches:
      a,b: {kind: affine, alpha: [0.3, 0], beta: [0, 0]}
      b,a: {kind: quadratic, alpha: 0.3, beta: 1, eta: 1.0e-3, center: 0}
    mu: 3
    epsilon: 1
    base_points: {a: [0, 0]}

Complex numbers are written as a scalar or a [re, im] pair.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import yaml

from conformal_cantor.cantor import (
    AffineBranch,
    CantorSystem,
    Piece,
    buzzard_system,
    perturbed_buzzard,
    quadratic_branch,
)
from conformal_cantor.certificate import BuzzardParams
from conformal_cantor.geometry import AffineMap, Square
from conformal_cantor.symbolic import Alphabet, Subshift, TransitionSet

PRESET_KEYS = {"delta", "kappa0", "c0", "c1", "kappa1", "kappa2", "c_prime", "lambda_growth", "perturbation"}
EXPLICIT_KEYS = {"alphabet", "transitions", "pieces", "branches", "mu", "epsilon", "base_points"}
COMMON_KEYS = {"grid"}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    system: CantorSystem
    params: BuzzardParams | None
    digest: str
    path: str
    grid: int = 50
    eta: float | None = None

    @property
    def is_preset(self) -> bool:
        return self.params is not None


def _num(value, where: str) -> float:
    # PyYAML reads "7e-8" (no dot) as a string
    try:
        if isinstance(value, bool):
            raise TypeError
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None


def _cplx(value, where: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"{where}: complex pairs need exactly [re, im]")
        return complex(_num(value[0], where), _num(value[1], where))
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    return complex(_num(value, where))


def _letter(raw, alphabet: dict, where: str):
    if raw in alphabet:
        return alphabet[raw]
    key = str(raw).strip()
    if key in alphabet:
        return alphabet[key]
    raise ConfigError(f"{where}: unknown letter {raw!r}")


def _pair(raw, alphabet: dict, where: str) -> tuple:
    if isinstance(raw, str):
        parts = raw.split(",")
    else:
        parts = list(raw)
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected a pair 'a,b', got {raw!r}")
    return _letter(parts[0], alphabet, where), _letter(parts[1], alphabet, where)


def _preset(block: dict, grid: int, digest: str, path: str) -> Config:
    if not isinstance(block, dict):
        raise ConfigError("buzzard: expected a mapping")
    unknown = set(block) - PRESET_KEYS
    if unknown:
        raise ConfigError(f"buzzard: unknown keys {sorted(unknown)}")
    delta = _num(block.get("delta", 7e-8), "buzzard.delta")
    kappa0 = _num(block.get("kappa0", 1e-6), "buzzard.kappa0")
    overrides = {k: _num(block[k], f"buzzard.{k}") for k in PRESET_KEYS - {"delta", "kappa0", "perturbation"} if k in block}
    params = BuzzardParams.preset(delta, kappa0, **overrides)
    pert = block.get("perturbation")
    eta = None
    if pert is not None:
        if not isinstance(pert, dict) or "eta" not in pert:
            raise ConfigError("buzzard.perturbation: expected {eta: X, seed: N}")
        eta = _num(pert["eta"], "buzzard.perturbation.eta")
        seed = pert.get("seed")
        seed = None if seed is None else int(_num(seed, "buzzard.perturbation.seed"))
        system = perturbed_buzzard(params.c0, params.c1, eta, seed=seed, validate=False)
    else:
        system = buzzard_system(params.c0, params.c1, validate=False)
    return Config(system, params, digest, path, grid, eta)


def _explicit(doc: dict, grid: int, digest: str, path: str) -> Config:
    missing = {"alphabet", "pieces", "branches", "mu"} - set(doc)
    if missing:
        raise ConfigError(f"missing fields {sorted(missing)}")
    letters = doc["alphabet"]
    if not isinstance(letters, list) or not letters:
        raise ConfigError("alphabet: expected a non-empty list")
    lookup = {}
    for raw in letters:
        lookup[raw] = raw
        lookup[str(raw)] = raw
    alphabet = Alphabet(tuple(letters))
    trans_raw = doc.get("transitions", "full")
    if trans_raw == "full":
        transitions = TransitionSet.full(alphabet)
    elif isinstance(trans_raw, list):
        transitions = TransitionSet(frozenset(_pair(t, lookup, f"transitions[{i}]") for i, t in enumerate(trans_raw)))
    else:
        raise ConfigError("transitions: expected 'full' or a list of pairs")
    epsilon = _num(doc.get("epsilon", 1), "epsilon")
    base_raw = doc.get("base_points") or {}
    pieces = {}
    if not isinstance(doc["pieces"], dict):
        raise ConfigError("pieces: expected a mapping letter -> {center, side}")
    for raw, spec in doc["pieces"].items():
        a = _letter(raw, lookup, f"pieces.{raw}")
        if not isinstance(spec, dict) or "center" not in spec or "side" not in spec:
            raise ConfigError(f"pieces.{raw}: expected {{center, side}}")
        center = _cplx(spec["center"], f"pieces.{raw}.center")
        side = _num(spec["side"], f"pieces.{raw}.side")
        if side <= 0:
            raise ConfigError(f"pieces.{raw}.side: must be positive")
        bp = base_raw.get(raw, base_raw.get(str(raw), None))
        base = center if bp is None else _cplx(bp, f"base_points.{raw}")
        pieces[a] = Piece(a, Square(center, side), base)
    branches = {}
    if not isinstance(doc["branches"], dict):
        raise ConfigError("branches: expected a mapping 'a,b' -> {kind, ...}")
    for raw, spec in doc["branches"].items():
        where = f"branches.{raw}"
        pair = _pair(raw, lookup, where)
        if not isinstance(spec, dict):
            raise ConfigError(f"{where}: expected a mapping")
        kind = spec.get("kind", "affine")
        alpha = _cplx(spec.get("alpha"), f"{where}.alpha")
        beta = _cplx(spec.get("beta", 0), f"{where}.beta")
        if alpha == 0:
            raise ConfigError(f"{where}.alpha: must be non-zero")
        if kind == "affine":
            branches[pair] = AffineBranch(AffineMap(alpha, beta), epsilon=epsilon)
        elif kind == "quadratic":
            eta = _cplx(spec.get("eta", 0), f"{where}.eta")
            center = _cplx(spec.get("center", pieces[pair[1]].region.center if pair[1] in pieces else 0), f"{where}.center")
            branches[pair] = quadratic_branch(alpha, beta, eta, center)
        else:
            raise ConfigError(f"{where}.kind: unsupported kind {kind!r} (affine | quadratic)")
    mu = _num(doc["mu"], "mu")
    system = CantorSystem(Subshift(alphabet, transitions), pieces, branches, mu, validate=False)
    return Config(system, None, digest, path, grid)


def parse_config(text: str, path: str = "<string>") -> Config:
    digest = hashlib.sha256(text.encode()).hexdigest()[:16]
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{path}: YAML parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    grid = int(_num(doc.get("grid", 50), "grid"))
    unknown = set(doc) - PRESET_KEYS.union(EXPLICIT_KEYS, COMMON_KEYS, {"buzzard"})
    if unknown:
        raise ConfigError(f"{path}: unknown fields {sorted(unknown)}")
    try:
        if "buzzard" in doc:
            clash = EXPLICIT_KEYS.intersection(doc)
            if clash:
                raise ConfigError(f"buzzard preset cannot be combined with {sorted(clash)}")
            return _preset(doc["buzzard"], grid, digest, path)
        return _explicit(doc, grid, digest, path)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path: str | Path) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    return parse_config(text, str(p))

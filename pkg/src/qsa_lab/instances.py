"""Discrete optimization instances on n-bit configuration spaces.

A configuration is an integer index in [0, 2**n); bit b of the index is spin
b+1 with the convention bit 0 <-> s = +1 and bit 1 <-> s = -1.  Energies are
stored as an explicit table of d = 2**n values so that the optimal set, the
cost gap and every Gibbs quantity downstream can be computed exactly by
exhaustive scan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInstanceError, DomainError, InstanceFormatError

# A configuration is just its integer index; kept as an alias for signatures.
Configuration = int


@dataclass(frozen=True)
class ProblemInstance:
    """Cost function over all d = 2**n configurations plus derived structure.

    Attributes
    ----------
    n : bit count, d = 2**n
    energies : float array of length d, one energy per configuration index
    e_max : upper bound on max |E(sigma)| (defaults to the tight bound)
    gamma : cost gap, min energy excess of any non-optimal configuration
    optimal_set : frozenset of configuration indices achieving min E
    name : identifier used in reports
    """

    n: int
    energies: np.ndarray
    e_max: float
    gamma: float
    optimal_set: frozenset[int]
    name: str = "instance"
    optimal_array: np.ndarray = field(repr=False, default=None)

    @property
    def d(self) -> int:
        return 1 << self.n

    @property
    def e_min(self) -> float:
        return float(self.energies[self.optimal_array[0]])


def evaluate(instance: ProblemInstance, config: Configuration) -> float:
    """Energy of a single configuration (pure table lookup)."""
    config = int(config)
    if not 0 <= config < instance.d:
        raise DomainError(f"configuration index {config} outside [0, {instance.d})")
    return float(instance.energies[config])


def analyze(
    energies,
    e_max: float | None = None,
    name: str = "instance",
) -> ProblemInstance:
    """Build a ProblemInstance from a raw energy table.

    The optimal set and the cost gap are found by a full scan with exact
    comparisons.  ``e_max`` may override the tight bound max|E| with any
    larger value (useful to share one bound across an instance family);
    smaller values are rejected.
    """
    energies = np.asarray(energies, dtype=np.float64)
    if energies.ndim != 1:
        raise InstanceFormatError("energies must be a flat list")
    d = energies.size
    n = int(d).bit_length() - 1
    if d < 2 or (1 << n) != d:
        raise InstanceFormatError(f"energy table has {d} entries, expected a power of two >= 2")
    if not np.all(np.isfinite(energies)):
        raise InstanceFormatError("energies must all be finite")

    e_min = energies.min()
    optimal = np.flatnonzero(energies == e_min)
    if optimal.size == d:
        raise DegenerateInstanceError("all energies equal: cost gap undefined")
    gamma = float(energies[energies > e_min].min() - e_min)

    tight = float(np.abs(energies).max())
    if e_max is None:
        e_max = tight
    elif e_max < tight:
        raise DomainError(f"e_max override {e_max} is below max|E| = {tight}")

    energies = energies.copy()
    energies.setflags(write=False)
    optimal.setflags(write=False)
    return ProblemInstance(
        n=n,
        energies=energies,
        e_max=float(e_max),
        gamma=gamma,
        optimal_set=frozenset(int(i) for i in optimal),
        name=name,
        optimal_array=optimal,
    )


def ising_chain_energies(n: int, couplings) -> np.ndarray:
    """Energy table E(sigma) = -sum_i J_i s_i s_{i+1} for an open spin chain."""
    if n < 2:
        raise DomainError(f"spin chain needs n >= 2, got {n}")
    couplings = np.asarray(couplings, dtype=np.float64)
    if couplings.shape != (n - 1,):
        raise DomainError(f"expected {n - 1} couplings, got shape {couplings.shape}")
    if not np.all(np.isfinite(couplings)):
        raise DomainError("couplings must be finite")
    sigma = np.arange(1 << n)[:, None]
    spins = 1 - 2 * ((sigma >> np.arange(n)) & 1)
    return -(couplings * spins[:, :-1] * spins[:, 1:]).sum(axis=1)


def generate_ising_chain(
    n: int,
    couplings,
    e_max: float | None = None,
    name: str | None = None,
) -> ProblemInstance:
    """Open Ising chain with the given couplings.

    Rejects coupling vectors whose energy table is constant (e.g. all-zero
    couplings), since the cost gap would be undefined.
    """
    energies = ising_chain_energies(n, couplings)
    if name is None:
        name = f"ising_chain_n{n}"
    return analyze(energies, e_max=e_max, name=name)


def generate_random_ising_chain(
    n: int,
    seed: int,
    coupling_magnitude: float = 1.0,
    e_max: float | None = None,
    name: str | None = None,
) -> ProblemInstance:
    """Ising chain with couplings drawn uniformly from [-magnitude, magnitude]."""
    if coupling_magnitude <= 0:
        raise DomainError("coupling_magnitude must be positive")
    rng = np.random.default_rng(seed)
    couplings = rng.uniform(-coupling_magnitude, coupling_magnitude, size=n - 1)
    if name is None:
        name = f"ising_random_n{n}_s{seed}"
    return generate_ising_chain(n, couplings, e_max=e_max, name=name)


def generate_weak_link_chain(
    n: int,
    ratio: float,
    e_max: float | None = None,
    name: str | None = None,
) -> ProblemInstance:
    """Ising chain with one weak bond: couplings (1, ratio, ..., ratio).

    For ratio >= 1 the cost gap stays pinned at 2 (breaking the unit bond)
    while the chain's spectral gap collapses with the barrier 2*ratio, so a
    ratio sweep with a shared e_max bound varies the spectral gap alone.
    """
    if ratio < 1.0:
        raise DomainError("ratio must be >= 1 so the unit bond stays the weakest")
    couplings = np.concatenate([[1.0], np.full(n - 2, float(ratio))])
    if name is None:
        name = f"weak_link_n{n}_r{ratio:g}"
    return generate_ising_chain(n, couplings, e_max=e_max, name=name)


def two_state(name: str = "two_state") -> ProblemInstance:
    """The minimal instance: n = 1, energies (0, 1)."""
    return analyze([0.0, 1.0], name=name)


# --- instance documents -----------------------------------------------------
#
# JSON schema (field names are part of the contract):
#   {"n": int, "energies": [d floats], "e_max": optional float}
#   {"type": "ising_chain", "n": int, "couplings": [n-1 floats]}
#   {"type": "ising_chain_random", "n": int, "seed": int, "coupling_magnitude": float}


def instance_from_document(doc: dict, name: str | None = None) -> ProblemInstance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    kind = doc.get("type")
    try:
        if kind is None:
            if "n" not in doc or "energies" not in doc:
                raise InstanceFormatError("explicit-table document needs 'n' and 'energies'")
            n = int(doc["n"])
            energies = doc["energies"]
            if len(energies) != (1 << n):
                raise InstanceFormatError(
                    f"document has {len(energies)} energies but n={n} implies {1 << n}"
                )
            return analyze(energies, e_max=doc.get("e_max"), name=name or f"table_n{n}")
        if kind == "ising_chain":
            return generate_ising_chain(int(doc["n"]), doc["couplings"], name=name)
        if kind == "ising_chain_random":
            return generate_random_ising_chain(
                int(doc["n"]),
                int(doc["seed"]),
                float(doc.get("coupling_magnitude", 1.0)),
                name=name,
            )
    except KeyError as exc:
        raise InstanceFormatError(f"instance document missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"malformed instance document: {exc}") from exc
    raise InstanceFormatError(f"unknown instance document type {kind!r}")


def instance_to_document(instance: ProblemInstance) -> dict:
    """Explicit-table document; floats survive the JSON round trip bit-exactly."""
    return {
        "n": instance.n,
        "energies": [float(e) for e in instance.energies],
        "e_max": float(instance.e_max),
    }


def load_instance(path: str, name: str | None = None) -> ProblemInstance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceFormatError(f"cannot read instance file {path}: {exc}") from exc
    return instance_from_document(doc, name=name)


def save_instance(instance: ProblemInstance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_document(instance), fh, indent=2)
        fh.write("\n")
